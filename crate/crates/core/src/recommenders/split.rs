use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::sampling::round_half_up;

pub const TEST_FRACTION: f64 = 0.2;
pub const VALID_FRACTION: f64 = 0.1;

/// Train/validation/test partition of a graph's edges. Node indices are
/// those of the source graph.
#[derive(Clone, Debug)]
pub struct Split {
    /// Train edges only, over the full node set of the source graph.
    pub train: BipartiteGraph,
    pub valid_edges: Vec<(u32, u32)>,
    pub test_edges: Vec<(u32, u32)>,
    /// Held-out items per user; empty for users that are not evaluated.
    pub valid_by_user: Vec<Vec<u32>>,
    pub test_by_user: Vec<Vec<u32>>,
    /// Users with test edges but no train edge.
    pub excluded_users: usize,
    /// Items with held-out edges but no train edge.
    pub excluded_items: usize,
}

impl Split {
    pub fn num_users(&self) -> usize {
        self.train.num_users()
    }

    pub fn num_items(&self) -> usize {
        self.train.num_items()
    }

    pub fn evaluated_users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_users()).filter(|&u| !self.test_by_user[u].is_empty())
    }

    /// Items a user may not be recommended at test time: train and validation.
    pub fn test_exclusions(&self, u: usize) -> Vec<u32> {
        let mut v: Vec<u32> = self.train.user_neighbors(u).to_vec();
        v.extend_from_slice(&self.valid_by_user[u]);
        v.sort_unstable();
        v
    }
}

/// Uniform random edge split: 20% test, then 10% of the rest as validation.
pub fn split_dataset<R: Rng + ?Sized>(g: &BipartiteGraph, rng: &mut R) -> Result<Split> {
    let e = g.num_edges();
    if e < 10 {
        return Err(Error::InvalidArgument(format!("cannot split {e} interactions; need at least 10")));
    }
    let mut edges: Vec<(u32, u32)> = g.edges().collect();
    edges.shuffle(rng);
    let n_test = round_half_up(e as f64 * TEST_FRACTION);
    let n_valid = round_half_up((e - n_test) as f64 * VALID_FRACTION);
    let test_edges: Vec<(u32, u32)> = edges[..n_test].to_vec();
    let valid_edges: Vec<(u32, u32)> = edges[n_test..n_test + n_valid].to_vec();
    let train_edges: Vec<(u32, u32)> = edges[n_test + n_valid..].to_vec();
    let users = (0..g.num_users()).map(|u| g.user_id(u).into()).collect();
    let items = (0..g.num_items()).map(|i| g.item_id(i).into()).collect();
    let train = BipartiteGraph::with_ids(users, items, train_edges)?;

    let (nu, ni) = (g.num_users(), g.num_items());
    let mut valid_by_user = vec![Vec::new(); nu];
    let mut test_by_user = vec![Vec::new(); nu];
    let mut excluded_item = vec![false; ni];
    let mut excluded_user = vec![false; nu];
    for (held, out) in [(&valid_edges, &mut valid_by_user), (&test_edges, &mut test_by_user)] {
        for &(u, i) in held.iter() {
            if train.user_degree(u as usize) == 0 {
                excluded_user[u as usize] = true;
                continue;
            }
            if train.item_degree(i as usize) == 0 {
                excluded_item[i as usize] = true;
                continue;
            }
            out[u as usize].push(i);
        }
    }
    for l in valid_by_user.iter_mut().chain(test_by_user.iter_mut()) {
        l.sort_unstable();
    }
    if test_by_user.iter().all(Vec::is_empty) {
        return Err(Error::EmptyTestSet);
    }
    Ok(Split {
        train,
        valid_edges,
        test_edges,
        valid_by_user,
        test_by_user,
        excluded_users: excluded_user.iter().filter(|&&x| x).count(),
        excluded_items: excluded_item.iter().filter(|&&x| x).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use std::collections::BTreeSet;

    fn grid(nu: u32, ni: u32) -> BipartiteGraph {
        let edges = (0..nu).flat_map(|u| (0..ni).map(move |i| (u, i))).collect();
        BipartiteGraph::from_edges(nu as usize, ni as usize, edges).unwrap()
    }

    #[test]
    fn protocol_sizes() {
        let g = grid(10, 10);
        let s = split_dataset(&g, &mut rng_from_seed(1)).unwrap();
        assert_eq!(s.test_edges.len(), 20);
        assert_eq!(s.valid_edges.len(), 8);
        assert_eq!(s.train.num_edges(), 72);
    }

    #[test]
    fn partition_of_edges() {
        let g = grid(7, 5);
        let s = split_dataset(&g, &mut rng_from_seed(9)).unwrap();
        let all: BTreeSet<_> = g.edges().collect();
        let train: BTreeSet<_> = s.train.edges().collect();
        let valid: BTreeSet<_> = s.valid_edges.iter().copied().collect();
        let test: BTreeSet<_> = s.test_edges.iter().copied().collect();
        assert!(train.is_disjoint(&valid) && train.is_disjoint(&test) && valid.is_disjoint(&test));
        let union: BTreeSet<_> = train.union(&valid).chain(test.iter()).copied().collect();
        assert_eq!(union, all);
    }

    #[test]
    fn deterministic() {
        let g = grid(6, 6);
        let a = split_dataset(&g, &mut rng_from_seed(3)).unwrap();
        let b = split_dataset(&g, &mut rng_from_seed(3)).unwrap();
        assert_eq!(a.test_edges, b.test_edges);
        assert_eq!(a.valid_edges, b.valid_edges);
    }

    #[test]
    fn too_small() {
        let g = grid(3, 3);
        assert!(split_dataset(&g, &mut rng_from_seed(0)).is_err());
    }
}
