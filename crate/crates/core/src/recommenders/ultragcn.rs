//! UltraGCN: free embeddings trained with a degree-weighted constraint loss
//! that stands in for infinite-depth propagation, plus an item-item term
//! over co-occurrence neighbors.

use super::config::{ModelConfig, ModelKind};
use super::gcn::init_embeddings;
use super::model::{dot, Embeddings, ModelExtras, TrainedModel};
use super::optim::{sigmoid, softplus, Adam};
use super::train::{batches, fit, sample_negative, Learner};
use super::Split;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seed::Rng;

/// `(1 / s_u) * sqrt((s_u + 1) / (s_i + 1))`.
pub fn constraint_weight(user_degree: usize, item_degree: usize) -> f64 {
    let (du, di) = (user_degree as f64, item_degree as f64);
    (1.0 / du) * ((du + 1.0) / (di + 1.0)).sqrt()
}

/// Co-occurrence neighbors of every item, strongest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemNeighbors {
    /// `(neighbor, co-occurrence count, omega)` per item.
    pub lists: Vec<Vec<(u32, u32, f64)>>,
    /// Items whose omega denominator was zero.
    pub skipped: usize,
}

/// For each item keeps its `k` strongest co-occurring items (ties by
/// ascending index), weighted by
/// `R_ij / (s_i - R_ii) * sqrt(s_i / s_j)` with `s` the weighted degree in
/// the item co-occurrence matrix `R^T R`.
pub fn item_neighbors(g: &BipartiteGraph, k: usize) -> ItemNeighbors {
    let ni = g.num_items();
    // s_i = sum over users of i of their degree; R_ii = degree of i
    let sigma: Vec<f64> = (0..ni)
        .map(|i| g.item_neighbors(i).iter().map(|&u| g.user_degree(u as usize) as f64).sum())
        .collect();
    let mut counts = vec![0u32; ni];
    let mut touched = Vec::new();
    let mut lists = Vec::with_capacity(ni);
    let mut skipped = 0;
    for i in 0..ni {
        let denom = sigma[i] - g.item_degree(i) as f64;
        if denom <= 0.0 {
            if g.item_degree(i) > 0 {
                skipped += 1;
            }
            lists.push(Vec::new());
            continue;
        }
        for &u in g.item_neighbors(i) {
            for &j in g.user_neighbors(u as usize) {
                if j as usize == i {
                    continue;
                }
                if counts[j as usize] == 0 {
                    touched.push(j);
                }
                counts[j as usize] += 1;
            }
        }
        let mut cand: Vec<(u32, u32)> = touched.iter().map(|&j| (j, counts[j as usize])).collect();
        cand.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        cand.truncate(k);
        lists.push(
            cand.iter()
                .map(|&(j, c)| (j, c, c as f64 / denom * (sigma[i] / sigma[j as usize]).sqrt()))
                .collect(),
        );
        for &j in &touched {
            counts[j as usize] = 0;
        }
        touched.clear();
    }
    ItemNeighbors { lists, skipped }
}

struct UltraLearner<'a> {
    train: &'a BipartiteGraph,
    cfg: &'a ModelConfig,
    neighbors: ItemNeighbors,
    params: Vec<f64>,
    grad: Vec<f64>,
    adam: Adam,
}

impl UltraLearner<'_> {
    fn user_row(&self, u: usize) -> usize {
        u * self.cfg.embedding_dim
    }

    fn item_row(&self, i: usize) -> usize {
        (self.train.num_users() + i) * self.cfg.embedding_dim
    }

    /// Adds `coef * d(score)/d(params)` for the pair of rows.
    fn push_pair(&mut self, a: usize, b: usize, coef: f64) {
        let d = self.cfg.embedding_dim;
        for k in 0..d {
            let (x, y) = (self.params[a + k], self.params[b + k]);
            self.grad[a + k] += coef * y;
            self.grad[b + k] += coef * x;
        }
    }

    fn score(&self, a: usize, b: usize) -> f64 {
        let d = self.cfg.embedding_dim;
        dot(&self.params[a..a + d], &self.params[b..b + d])
    }
}

impl Learner for UltraLearner<'_> {
    fn train_epoch(&mut self, rng: &mut Rng) -> f64 {
        let cfg = self.cfg;
        let d = cfg.embedding_dim;
        let mut total = 0.0;
        let batches = batches(self.train, cfg.batch_size, rng);
        let nb = batches.len();
        for batch in batches {
            self.grad.fill(0.0);
            let inv = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &(u, i) in &batch {
                let (u, i) = (u as usize, i as usize);
                let du = self.train.user_degree(u);
                let ru = self.user_row(u);
                let ri = self.item_row(i);
                let mut rows = vec![ru, ri];

                let beta = constraint_weight(du, self.train.item_degree(i));
                let w_pos = cfg.w1 + cfg.w2 * beta;
                let s = self.score(ru, ri);
                loss += inv * w_pos * softplus(-s);
                let mut g_pos = -inv * w_pos * sigmoid(-s);
                if cfg.unweighted_term {
                    loss += inv * softplus(-s);
                    g_pos -= inv * sigmoid(-s);
                }
                self.push_pair(ru, ri, g_pos);

                let neg_scale = cfg.negative_weight / cfg.negatives as f64;
                for _ in 0..cfg.negatives {
                    let Some(j) = sample_negative(self.train, u, rng) else { break };
                    let j = j as usize;
                    let rj = self.item_row(j);
                    let w_neg = cfg.w3 + cfg.w4 * constraint_weight(du, self.train.item_degree(j));
                    let s = self.score(ru, rj);
                    loss += inv * neg_scale * w_neg * softplus(s);
                    let mut g = inv * neg_scale * w_neg * sigmoid(s);
                    if cfg.unweighted_term {
                        loss += inv * softplus(s) / cfg.negatives as f64;
                        g += inv * sigmoid(s) / cfg.negatives as f64;
                    }
                    self.push_pair(ru, rj, g);
                    rows.push(rj);
                }

                if cfg.item_loss_weight > 0.0 {
                    let nbrs = std::mem::take(&mut self.neighbors.lists[i]);
                    for &(j, _, omega) in &nbrs {
                        let rj = self.item_row(j as usize);
                        let s = self.score(ru, rj);
                        let w = cfg.item_loss_weight * omega;
                        loss += inv * w * softplus(-s);
                        self.push_pair(ru, rj, -inv * w * sigmoid(-s));
                    }
                    self.neighbors.lists[i] = nbrs;
                }

                for r in rows {
                    for k in 0..d {
                        let v = self.params[r + k];
                        loss += 0.5 * cfg.l2 * inv * v * v;
                        self.grad[r + k] += cfg.l2 * inv * v;
                    }
                }
            }
            self.adam.step(&mut self.params, &self.grad);
            total += loss;
        }
        total / nb.max(1) as f64
    }

    fn embeddings(&self) -> (Embeddings, Embeddings) {
        let nu = self.train.num_users();
        let d = self.cfg.embedding_dim;
        (
            Embeddings::from_data(nu, d, self.params[..nu * d].to_vec()),
            Embeddings::from_data(self.train.num_items(), d, self.params[nu * d..].to_vec()),
        )
    }

    fn extras(&self) -> ModelExtras {
        ModelExtras::UltraGcn {
            skipped_items: self.neighbors.skipped,
        }
    }
}

pub fn train_ultragcn(split: &Split, cfg: &ModelConfig, rng: &mut Rng) -> Result<TrainedModel> {
    if cfg.kind != ModelKind::UltraGcn {
        return Err(Error::InvalidArgument(format!("expected an UltraGCN config, got {}", cfg.kind)));
    }
    cfg.validate()?;
    let train = &split.train;
    let n = train.num_users() + train.num_items();
    let params = init_embeddings(n, cfg.embedding_dim, cfg.init_std, rng);
    let neighbors = item_neighbors(train, cfg.item_topk);
    if neighbors.skipped > 0 {
        log::debug!("{} items without co-occurrence weights", neighbors.skipped);
    }
    let learner = UltraLearner {
        train,
        cfg,
        neighbors,
        grad: vec![0.0; params.len()],
        adam: Adam::new(params.len(), cfg.learning_rate),
        params,
    };
    fit(learner, split, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_weight_examples() {
        assert!((constraint_weight(1, 3) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((constraint_weight(1, 3) - 0.70711).abs() < 1e-5);
        assert!((constraint_weight(4, 4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn neighbors_against_hand_counts() {
        // users: 0 -> {0,1,2}, 1 -> {0,1}, 2 -> {3}
        let g = BipartiteGraph::from_edges(3, 4, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 3)]).unwrap();
        let n = item_neighbors(&g, 5);
        let ids: Vec<u32> = n.lists[0].iter().map(|x| x.0).collect();
        assert_eq!(ids, vec![1, 2]);
        assert_eq!(n.lists[0][0].1, 2);
        // item 3's only user has degree 1, so its omega is undefined
        assert!(n.lists[3].is_empty());
        assert_eq!(n.skipped, 1);
        // s_0 = 3 + 2, R_00 = 2, s_1 = 5
        let omega = 2.0 / 3.0 * (5.0f64 / 5.0).sqrt();
        assert!((n.lists[0][0].2 - omega).abs() < 1e-15);
    }
}
