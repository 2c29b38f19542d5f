//! Synthetic interaction graphs used by tests, benchmarks and demos.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::graph::BipartiteGraph;

/// Heavy-tailed random bipartite graph: endpoints are drawn independently
/// with weight `(rank + 1)^-exponent`, duplicate draws collapse. The result
/// usually has slightly fewer than `target_edges` edges and may contain
/// isolated nodes; run it through the largest-component filter before use.
pub fn scale_free<R: Rng + ?Sized>(
    num_users: usize,
    num_items: usize,
    target_edges: usize,
    exponent: f64,
    rng: &mut R,
) -> BipartiteGraph {
    let weights = |n: usize| -> Vec<f64> { (0..n).map(|r| ((r + 1) as f64).powf(-exponent)).collect() };
    let users = WeightedIndex::new(weights(num_users)).expect("positive weights");
    let items = WeightedIndex::new(weights(num_items)).expect("positive weights");
    let edges = (0..target_edges)
        .map(|_| (users.sample(rng) as u32, items.sample(rng) as u32))
        .collect();
    BipartiteGraph::from_edges(num_users, num_items, edges).expect("edges in range")
}

/// Parameters of the two-community benchmark: users and items are split in
/// two halves, users mostly pick items of their own half, and item choice
/// within a half follows a Zipf-like popularity curve.
#[derive(Clone, Debug)]
pub struct TwoBlock {
    pub num_users: usize,
    pub num_items: usize,
    pub interactions_per_user: usize,
    pub in_block_probability: f64,
    pub popularity_exponent: f64,
}

impl Default for TwoBlock {
    fn default() -> Self {
        TwoBlock {
            num_users: 300,
            num_items: 300,
            interactions_per_user: 20,
            in_block_probability: 0.9,
            popularity_exponent: 0.8,
        }
    }
}

impl TwoBlock {
    pub fn block_of_user(&self, u: usize) -> usize {
        usize::from(u >= self.num_users / 2)
    }

    pub fn block_of_item(&self, i: usize) -> usize {
        usize::from(i >= self.num_items / 2)
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> BipartiteGraph {
        let half = self.num_items / 2;
        let block_items = [(0..half).collect::<Vec<_>>(), (half..self.num_items).collect::<Vec<_>>()];
        let popularity: Vec<WeightedIndex<f64>> = block_items
            .iter()
            .map(|items| {
                WeightedIndex::new(
                    (0..items.len()).map(|r| ((r + 1) as f64).powf(-self.popularity_exponent)),
                )
                .expect("positive weights")
            })
            .collect();
        let mut edges = Vec::with_capacity(self.num_users * self.interactions_per_user);
        for u in 0..self.num_users {
            let own = self.block_of_user(u);
            let mut picked = std::collections::BTreeSet::new();
            let mut guard = 0;
            while picked.len() < self.interactions_per_user && guard < 100 * self.interactions_per_user {
                guard += 1;
                let item = if rng.random::<f64>() < self.in_block_probability {
                    block_items[own][popularity[own].sample(rng)]
                } else {
                    let other = &block_items[1 - own];
                    other[rng.random_range(0..other.len())]
                };
                picked.insert(item as u32);
            }
            edges.extend(picked.into_iter().map(|i| (u as u32, i)));
        }
        BipartiteGraph::from_edges(self.num_users, self.num_items, edges).expect("edges in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn two_block_has_requested_shape() {
        let spec = TwoBlock::default();
        let g = spec.generate(&mut rng_from_seed(1));
        assert_eq!(g.num_users(), 300);
        assert_eq!(g.num_edges(), 300 * 20);
        let in_block = g
            .edges()
            .filter(|&(u, i)| spec.block_of_user(u as usize) == spec.block_of_item(i as usize))
            .count();
        assert!(in_block as f64 / g.num_edges() as f64 > 0.8);
    }

    #[test]
    fn scale_free_is_heavy_tailed() {
        let g = scale_free(500, 500, 4000, 0.8, &mut rng_from_seed(2));
        let mut d = g.degrees(crate::graph::Partition::Item);
        d.sort_unstable();
        let max = *d.last().unwrap();
        let median = d[d.len() / 2];
        assert!(max > 10 * median.max(1));
    }
}
