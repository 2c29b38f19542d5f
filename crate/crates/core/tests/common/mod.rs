//! Brute-force reference implementations and random graph generators
//! shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use topocf::graph::{BipartiteGraph, Partition};

/// Random bipartite graph with at most `max_nodes` nodes and at least one edge.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> BipartiteGraph {
    let nu = rng.random_range(1..=max_nodes / 2);
    let ni = rng.random_range(1..=max_nodes - nu);
    let p: f64 = rng.random_range(0.02..0.6);
    let mut edges: Vec<(u32, u32)> = (0..nu as u32)
        .flat_map(|u| (0..ni as u32).map(move |i| (u, i)))
        .filter(|_| rng.random_bool(p))
        .collect();
    if edges.is_empty() {
        edges.push((rng.random_range(0..nu as u32), rng.random_range(0..ni as u32)));
    }
    BipartiteGraph::from_edges(nu, ni, edges).unwrap()
}

fn neighborhoods(g: &BipartiteGraph, partition: Partition) -> Vec<BTreeSet<u32>> {
    (0..g.count(partition))
        .map(|v| g.neighbors(partition, v).iter().copied().collect())
        .collect()
}

/// `sum_{i<j} |x_i - x_j| / (n * sum)` by explicit pairs.
pub fn gini_pairs(x: &[usize]) -> f64 {
    let n = x.len();
    let total: usize = x.iter().sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (x[i] as f64 - x[j] as f64).abs();
        }
    }
    acc / (n as f64 * total as f64)
}

/// Per-node mean Jaccard overlap with every other same-partition node
/// sharing at least one neighbor, by comparing all pairs.
pub fn clustering_pairs(g: &BipartiteGraph, partition: Partition) -> Vec<Option<f64>> {
    let sets = neighborhoods(g, partition);
    (0..sets.len())
        .map(|v| {
            let overlaps: Vec<f64> = (0..sets.len())
                .filter(|&w| w != v)
                .filter_map(|w| {
                    let inter = sets[v].intersection(&sets[w]).count();
                    (inter > 0).then(|| inter as f64 / sets[v].union(&sets[w]).count() as f64)
                })
                .collect();
            (!overlaps.is_empty()).then(|| overlaps.iter().sum::<f64>() / overlaps.len() as f64)
        })
        .collect()
}

/// Degree assortativity of the projection from the degree-mixing counts
/// `c_jk` (ordered edge ends), evaluated exactly in integers:
/// `sum jk (e_jk - q_j q_k) / sigma_q^2` with `e = c / T` becomes
/// `(T sum jk c_jk - S1^2) / (T S2 - S1^2)`.
pub fn assortativity_mixing(g: &BipartiteGraph, partition: Partition) -> Option<f64> {
    let sets = neighborhoods(g, partition);
    let n = sets.len();
    let mut adj = vec![BTreeSet::new(); n];
    for v in 0..n {
        for w in v + 1..n {
            if sets[v].intersection(&sets[w]).next().is_some() {
                adj[v].insert(w);
                adj[w].insert(v);
            }
        }
    }
    let deg: Vec<i128> = adj.iter().map(|a| a.len() as i128).collect();
    let (mut t, mut s1, mut s2, mut cross) = (0i128, 0i128, 0i128, 0i128);
    for v in 0..n {
        for &w in &adj[v] {
            t += 1;
            s1 += deg[v];
            s2 += deg[v] * deg[v];
            cross += deg[v] * deg[w];
        }
    }
    let den = t * s2 - s1 * s1;
    if t == 0 || den == 0 {
        return None;
    }
    Some((t * cross - s1 * s1) as f64 / den as f64)
}

/// Projection by all-pairs intersection: `(v, w) -> |N(v) ∩ N(w)|`, `v < w`.
pub fn projection_pairs(g: &BipartiteGraph, partition: Partition) -> BTreeMap<(u32, u32), u32> {
    let sets = neighborhoods(g, partition);
    let mut out = BTreeMap::new();
    for v in 0..sets.len() {
        for w in v + 1..sets.len() {
            let c = sets[v].intersection(&sets[w]).count();
            if c > 0 {
                out.insert((v as u32, w as u32), c as u32);
            }
        }
    }
    out
}

/// Solves the normal equations `(A^T A) b = A^T y` for `A = [1 | X]` by
/// Gauss-Jordan elimination with partial pivoting.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let row = |i: usize| std::iter::once(1.0).chain(x[i].iter().copied()).collect::<Vec<_>>();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..x.len() {
        let r = row(i);
        for j in 0..p {
            for k in 0..p {
                a[j][k] += r[j] * r[k];
            }
            a[j][p] += r[j] * y[i];
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.iter().map(|r| r[p]).collect()
}
