//! LightGCN and DGCF: layer-0 embeddings propagated over the train graph and
//! trained with the pairwise ranking loss.

use rand_distr::{Distribution, Normal};

use super::config::{ModelConfig, ModelKind};
use super::model::{dot, Embeddings, ModelExtras, TrainedModel};
use super::optim::{sigmoid, softplus, Adam};
use super::propagation::{EdgeList, GraphConv, Routing};
use super::train::{batches, fit, sample_negative, Learner};
use super::Split;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seed::Rng;

/// Normal(0, std) initial embeddings for all users then all items.
pub(crate) fn init_embeddings(rows: usize, dim: usize, std: f64, rng: &mut Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, std).expect("positive std");
    (0..rows * dim).map(|_| normal.sample(rng)).collect()
}

struct BprLearner<'a> {
    train: &'a BipartiteGraph,
    conv: GraphConv,
    params: Vec<f64>,
    adam: Adam,
    batch_size: usize,
    l2: f64,
}

impl BprLearner<'_> {
    fn split_output(&self, out: &[f64]) -> (Embeddings, Embeddings) {
        let nu = self.train.num_users();
        let ni = self.train.num_items();
        let d = self.conv.dim;
        (
            Embeddings::from_data(nu, d, out[..nu * d].to_vec()),
            Embeddings::from_data(ni, d, out[nu * d..].to_vec()),
        )
    }
}

impl Learner for BprLearner<'_> {
    fn train_epoch(&mut self, rng: &mut Rng) -> f64 {
        let d = self.conv.dim;
        let nu = self.train.num_users();
        let mut total = 0.0;
        let batches = batches(self.train, self.batch_size, rng);
        let nb = batches.len();
        for batch in batches {
            let triples: Vec<(usize, usize, usize)> = batch
                .iter()
                .filter_map(|&(u, i)| {
                    sample_negative(self.train, u as usize, rng).map(|j| (u as usize, i as usize, j as usize))
                })
                .collect();
            if triples.is_empty() {
                continue;
            }
            let inv = 1.0 / triples.len() as f64;
            let fwd = self.conv.forward(&self.params);
            let out = &fwd.output;
            let mut grad_out = vec![0.0; out.len()];
            let mut reg_grad = vec![0.0; out.len()];
            let mut loss = 0.0;
            for &(u, i, j) in &triples {
                let (ru, ri, rj) = (u * d, (nu + i) * d, (nu + j) * d);
                let eu = &out[ru..ru + d];
                let x = dot(eu, &out[ri..ri + d]) - dot(eu, &out[rj..rj + d]);
                loss += softplus(-x) * inv;
                let g = -sigmoid(-x) * inv;
                for k in 0..d {
                    let (fu, fi, fj) = (out[ru + k], out[ri + k], out[rj + k]);
                    grad_out[ru + k] += g * (fi - fj);
                    grad_out[ri + k] += g * fu;
                    grad_out[rj + k] -= g * fu;
                }
                for r in [ru, ri, rj] {
                    let row = &self.params[r..r + d];
                    loss += 0.5 * self.l2 * inv * row.iter().map(|v| v * v).sum::<f64>();
                    for k in 0..d {
                        reg_grad[r + k] += self.l2 * inv * row[k];
                    }
                }
            }
            let mut grad = self.conv.backward(&fwd, &grad_out);
            for (g, r) in grad.iter_mut().zip(&reg_grad) {
                *g += r;
            }
            self.adam.step(&mut self.params, &grad);
            total += loss;
        }
        total / nb.max(1) as f64
    }

    fn embeddings(&self) -> (Embeddings, Embeddings) {
        self.split_output(&self.conv.forward(&self.params).output)
    }

    fn extras(&self) -> ModelExtras {
        match self.conv.routing {
            Routing::None => ModelExtras::None,
            Routing::Intents { .. } => {
                let fwd = self.conv.forward(&self.params);
                ModelExtras::Dgcf {
                    intent_weights: fwd.weights.last().cloned().unwrap_or_default(),
                }
            }
        }
    }
}

fn train_graph_model(split: &Split, cfg: &ModelConfig, routing: Routing, rng: &mut Rng) -> Result<TrainedModel> {
    cfg.validate()?;
    let train = &split.train;
    let n = train.num_users() + train.num_items();
    let params = init_embeddings(n, cfg.embedding_dim, cfg.init_std, rng);
    let learner = BprLearner {
        train,
        conv: GraphConv {
            edges: EdgeList::new(train),
            dim: cfg.embedding_dim,
            layers: cfg.layers,
            routing,
        },
        adam: Adam::new(params.len(), cfg.learning_rate),
        params,
        batch_size: cfg.batch_size,
        l2: cfg.l2,
    };
    fit(learner, split, cfg, rng)
}

pub fn train_lightgcn(split: &Split, cfg: &ModelConfig, rng: &mut Rng) -> Result<TrainedModel> {
    if cfg.kind != ModelKind::LightGcn {
        return Err(Error::InvalidArgument(format!("expected a LightGCN config, got {}", cfg.kind)));
    }
    train_graph_model(split, cfg, Routing::None, rng)
}

pub fn train_dgcf(split: &Split, cfg: &ModelConfig, rng: &mut Rng) -> Result<TrainedModel> {
    if cfg.kind != ModelKind::Dgcf {
        return Err(Error::InvalidArgument(format!("expected a DGCF config, got {}", cfg.kind)));
    }
    let routing = Routing::Intents {
        intents: cfg.intents,
        iterations: cfg.routing_iterations,
    };
    train_graph_model(split, cfg, routing, rng)
}
