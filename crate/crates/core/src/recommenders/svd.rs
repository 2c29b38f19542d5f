//! Truncated SVD of the degree-damped interaction matrix by randomized
//! subspace iteration.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seed::Rng;

/// Sparse `users x items` matrix with entries `1 / sqrt((s_u + a2)(s_i + a2))`
/// on the edges of the graph.
#[derive(Clone, Debug)]
pub struct NormalizedInteractions {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(u32, u32, f64)>,
}

impl NormalizedInteractions {
    pub fn new(g: &BipartiteGraph, a2: f64) -> Self {
        let entries = g
            .edges()
            .map(|(u, i)| {
                let du = g.user_degree(u as usize) as f64 + a2;
                let di = g.item_degree(i as usize) as f64 + a2;
                (u, i, 1.0 / (du * di).sqrt())
            })
            .collect();
        NormalizedInteractions {
            rows: g.num_users(),
            cols: g.num_items(),
            entries,
        }
    }

    /// `A x` for a dense `cols x k` block.
    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.rows, x.ncols());
        for c in 0..x.ncols() {
            let (src, mut dst) = (x.column(c), y.column_mut(c));
            for &(u, i, v) in &self.entries {
                dst[u as usize] += v * src[i as usize];
            }
        }
        y
    }

    /// `A^T x` for a dense `rows x k` block.
    pub fn mul_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.cols, x.ncols());
        for c in 0..x.ncols() {
            let (src, mut dst) = (x.column(c), y.column_mut(c));
            for &(u, i, v) in &self.entries {
                dst[i as usize] += v * src[u as usize];
            }
        }
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 8,
            min_iterations: 7,
            max_iterations: 1000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// `rows x k`, column `c` is the left vector of `values[c]`.
    pub left: DMatrix<f64>,
    /// `cols x k`.
    pub right: DMatrix<f64>,
    /// Descending.
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Largest `|A v - s u|` over the returned triplets.
    pub residual: f64,
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Top-`k` singular triplets. Iterates at least `min_iterations` times and
/// then until every returned triplet has residual below the tolerance.
pub fn truncated_svd(a: &NormalizedInteractions, k: usize, opts: &SvdOptions, rng: &mut Rng) -> Result<TruncatedSvd> {
    let small = a.rows.min(a.cols);
    if k == 0 || k > small {
        return Err(Error::InvalidArgument(format!(
            "rank {k} must be between 1 and min(users, items) = {small}"
        )));
    }
    let width = (k + opts.oversample).min(small);
    let omega = DMatrix::from_fn(a.cols, width, |_, _| StandardNormal.sample(rng));
    let mut q = orthonormal_basis(a.mul(&omega));
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let z = orthonormal_basis(a.mul_transpose(&q));
        q = orthonormal_basis(a.mul(&z));
        if it < opts.min_iterations {
            continue;
        }
        // Rayleigh-Ritz on the current subspace: B = Q^T A
        let bt = a.mul_transpose(&q);
        let svd = bt.transpose().svd(true, true);
        let (ub, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));
        order.truncate(k);
        let left_all = &q * &ub;
        let left = DMatrix::from_fn(a.rows, k, |r, c| left_all[(r, order[c])]);
        let right = DMatrix::from_fn(a.cols, k, |r, c| vt[(order[c], r)]);
        let values: Vec<f64> = order.iter().map(|&c| svd.singular_values[c]).collect();
        let av = a.mul(&right);
        residual = (0..k)
            .map(|c| (av.column(c) - left.column(c) * values[c]).norm())
            .fold(0.0, f64::max);
        if residual < opts.tolerance {
            let (left, right) = fix_signs(left, right);
            return Ok(TruncatedSvd {
                left,
                right,
                values,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::SvdNotConverged {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Flips each pair so the largest-magnitude entry of the left vector is
/// positive.
fn fix_signs(mut left: DMatrix<f64>, mut right: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    for c in 0..left.ncols() {
        let col = left.column(c);
        let (mut best, mut at) = (0.0, 0);
        for (r, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                at = r;
            }
        }
        if col[at] < 0.0 {
            left.column_mut(c).neg_mut();
            right.column_mut(c).neg_mut();
        }
    }
    (left, right)
}

/// `max_degree / (max_degree + a2)`.
pub fn spectral_bound(g: &BipartiteGraph, a2: f64) -> f64 {
    let d = g.max_degree() as f64;
    d / (d + a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn complete_two_by_two() {
        let g = BipartiteGraph::from_edges(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let a = NormalizedInteractions::new(&g, 0.0);
        assert!(a.entries.iter().all(|e| e.2 == 0.5));
        let s = truncated_svd(&a, 1, &SvdOptions::default(), &mut rng_from_seed(1)).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!((spectral_bound(&g, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_decomposition() {
        let edges = vec![(0, 0), (0, 2), (1, 1), (1, 2), (2, 0), (3, 3), (3, 1), (4, 2), (4, 4), (2, 4)];
        let g = BipartiteGraph::from_edges(5, 5, edges).unwrap();
        let a = NormalizedInteractions::new(&g, 2.0);
        let mut dense = DMatrix::zeros(5, 5);
        for &(u, i, v) in &a.entries {
            dense[(u as usize, i as usize)] = v;
        }
        let mut want: Vec<f64> = dense.svd(false, false).singular_values.iter().copied().collect();
        want.sort_by(|x, y| y.total_cmp(x));
        let s = truncated_svd(&a, 3, &SvdOptions::default(), &mut rng_from_seed(5)).unwrap();
        for c in 0..3 {
            assert!((s.values[c] - want[c]).abs() < 1e-9);
        }
        assert!(s.values[0] <= spectral_bound(&g, 2.0) + 1e-12);
    }

    #[test]
    fn rank_out_of_range() {
        let g = BipartiteGraph::from_edges(2, 3, vec![(0, 0), (1, 1), (1, 2)]).unwrap();
        let a = NormalizedInteractions::new(&g, 1.0);
        assert!(truncated_svd(&a, 3, &SvdOptions::default(), &mut rng_from_seed(0)).is_err());
    }
}
