//! SVD-GCN: embeddings built from the top singular vectors of the damped
//! interaction matrix, scaled by `exp(a1 * lambda)` and mixed by a
//! trainable square transform.

use nalgebra::DMatrix;
use rand::Rng as _;

use super::config::{ModelConfig, ModelKind};
use super::model::{dot, Embeddings, ModelExtras, TrainedModel};
use super::optim::{sigmoid, softplus, Adam};
use super::svd::{truncated_svd, NormalizedInteractions, SvdOptions, TruncatedSvd};
use super::train::{batches, fit, sample_negative, Learner};
use super::Split;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seed::Rng;

/// Rows `p_u * exp(a1 * lambda)` for users then `q_i * exp(a1 * lambda)` for
/// items, as one `(U + I) x k` row-major buffer.
pub fn spectral_features(svd: &TruncatedSvd, a1: f64) -> Vec<f64> {
    let k = svd.values.len();
    let scale: Vec<f64> = svd.values.iter().map(|l| (a1 * l).exp()).collect();
    let (nu, ni) = (svd.left.nrows(), svd.right.nrows());
    let mut out = Vec::with_capacity((nu + ni) * k);
    for u in 0..nu {
        out.extend((0..k).map(|c| svd.left[(u, c)] * scale[c]));
    }
    for i in 0..ni {
        out.extend((0..k).map(|c| svd.right[(i, c)] * scale[c]));
    }
    out
}

fn to_embeddings(m: &DMatrix<f64>) -> Embeddings {
    Embeddings::from_data(m.nrows(), m.ncols(), (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect())
}

struct SvdLearner<'a> {
    train: &'a BipartiteGraph,
    cfg: &'a ModelConfig,
    svd: TruncatedSvd,
    /// `(U + I) x k` spectral features.
    features: Vec<f64>,
    rank: usize,
    /// `k x b` row-major.
    w: Vec<f64>,
    adam: Adam,
}

impl SvdLearner<'_> {
    fn project(&self) -> Vec<f64> {
        let (k, b) = (self.rank, self.cfg.embedding_dim);
        let n = self.features.len() / k;
        let mut e = vec![0.0; n * b];
        for r in 0..n {
            let a = &self.features[r * k..(r + 1) * k];
            let out = &mut e[r * b..(r + 1) * b];
            for (c, &av) in a.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let wrow = &self.w[c * b..(c + 1) * b];
                for (o, wv) in out.iter_mut().zip(wrow) {
                    *o += av * wv;
                }
            }
        }
        e
    }
}

impl Learner for SvdLearner<'_> {
    fn train_epoch(&mut self, rng: &mut Rng) -> f64 {
        let cfg = self.cfg;
        let (k, b) = (self.rank, cfg.embedding_dim);
        let nu = self.train.num_users();
        let ni = self.train.num_items();
        let mut total = 0.0;
        let batches = batches(self.train, cfg.batch_size, rng);
        let nb = batches.len();
        for batch in batches {
            let e = self.project();
            let mut ge = vec![0.0; e.len()];
            let inv = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            let mut touched = Vec::new();
            let row = |x: usize| x * b;
            let pair = |ge: &mut Vec<f64>, x: usize, y: usize, coef: f64| {
                let (rx, ry) = (row(x), row(y));
                for c in 0..b {
                    let (ex, ey) = (e[rx + c], e[ry + c]);
                    ge[rx + c] += coef * ey;
                    ge[ry + c] += coef * ex;
                }
            };
            let score = |x: usize, y: usize| dot(&e[row(x)..row(x) + b], &e[row(y)..row(y) + b]);
            for &(u, i) in &batch {
                let (u, i) = (u as usize, i as usize);
                let (nu_u, ni_i) = (u, nu + i);
                touched.extend([nu_u, ni_i]);
                if let Some(j) = sample_negative(self.train, u, rng) {
                    let nj = nu + j as usize;
                    let x = score(nu_u, ni_i) - score(nu_u, nj);
                    loss += inv * softplus(-x);
                    let g = -inv * sigmoid(-x);
                    pair(&mut ge, nu_u, ni_i, g);
                    pair(&mut ge, nu_u, nj, -g);
                    touched.push(nj);
                }
                // same-partition positives share a neighbor across the edge
                if cfg.user_loss_weight > 0.0 && nu > 1 {
                    let users = self.train.item_neighbors(i);
                    if users.len() > 1 {
                        let mut v = users[rng.random_range(0..users.len())] as usize;
                        while v == u {
                            v = users[rng.random_range(0..users.len())] as usize;
                        }
                        let s = score(nu_u, v);
                        loss += inv * cfg.user_loss_weight * softplus(-s);
                        pair(&mut ge, nu_u, v, -inv * cfg.user_loss_weight * sigmoid(-s));
                        touched.push(v);
                    }
                    let mut w = rng.random_range(0..nu);
                    while w == u {
                        w = rng.random_range(0..nu);
                    }
                    let s = score(nu_u, w);
                    loss += inv * cfg.user_loss_weight * softplus(s);
                    pair(&mut ge, nu_u, w, inv * cfg.user_loss_weight * sigmoid(s));
                    touched.push(w);
                }
                if cfg.item_loss_weight > 0.0 && ni > 1 {
                    let items = self.train.user_neighbors(u);
                    if items.len() > 1 {
                        let mut v = items[rng.random_range(0..items.len())] as usize;
                        while v == i {
                            v = items[rng.random_range(0..items.len())] as usize;
                        }
                        let s = score(ni_i, nu + v);
                        loss += inv * cfg.item_loss_weight * softplus(-s);
                        pair(&mut ge, ni_i, nu + v, -inv * cfg.item_loss_weight * sigmoid(-s));
                        touched.push(nu + v);
                    }
                    let mut w = rng.random_range(0..ni);
                    while w == i {
                        w = rng.random_range(0..ni);
                    }
                    let s = score(ni_i, nu + w);
                    loss += inv * cfg.item_loss_weight * softplus(s);
                    pair(&mut ge, ni_i, nu + w, inv * cfg.item_loss_weight * sigmoid(s));
                    touched.push(nu + w);
                }
            }
            for &r in &touched {
                for c in 0..b {
                    let v = e[row(r) + c];
                    loss += 0.5 * cfg.l2 * inv * v * v;
                    ge[row(r) + c] += cfg.l2 * inv * v;
                }
            }
            // dW = F^T dE
            touched.sort_unstable();
            touched.dedup();
            let mut gw = vec![0.0; k * b];
            for &r in &touched {
                let a = &self.features[r * k..(r + 1) * k];
                let g = &ge[r * b..(r + 1) * b];
                for (c, &av) in a.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    for (dst, gv) in gw[c * b..(c + 1) * b].iter_mut().zip(g) {
                        *dst += av * gv;
                    }
                }
            }
            self.adam.step(&mut self.w, &gw);
            total += loss;
        }
        total / nb.max(1) as f64
    }

    fn embeddings(&self) -> (Embeddings, Embeddings) {
        let nu = self.train.num_users();
        let b = self.cfg.embedding_dim;
        let e = self.project();
        (
            Embeddings::from_data(nu, b, e[..nu * b].to_vec()),
            Embeddings::from_data(self.train.num_items(), b, e[nu * b..].to_vec()),
        )
    }

    fn extras(&self) -> ModelExtras {
        ModelExtras::SvdGcn {
            left: to_embeddings(&self.svd.left),
            right: to_embeddings(&self.svd.right),
            singular_values: self.svd.values.clone(),
            transform: Embeddings::from_data(self.rank, self.cfg.embedding_dim, self.w.clone()),
        }
    }
}

pub fn svd_options(cfg: &ModelConfig) -> SvdOptions {
    SvdOptions {
        oversample: cfg.svd_oversample,
        min_iterations: cfg.svd_power_iterations,
        max_iterations: cfg.svd_max_iterations,
        tolerance: cfg.svd_tolerance,
    }
}

pub fn train_svdgcn(split: &Split, cfg: &ModelConfig, rng: &mut Rng) -> Result<TrainedModel> {
    if cfg.kind != ModelKind::SvdGcn {
        return Err(Error::InvalidArgument(format!("expected an SVD-GCN config, got {}", cfg.kind)));
    }
    cfg.validate()?;
    let train = &split.train;
    let matrix = NormalizedInteractions::new(train, cfg.a2);
    let svd = truncated_svd(&matrix, cfg.rank, &svd_options(cfg), rng)?;
    let features = spectral_features(&svd, cfg.a1);
    let (k, b) = (cfg.rank, cfg.embedding_dim);
    // identity on the leading square block
    let mut w = vec![0.0; k * b];
    for c in 0..k.min(b) {
        w[c * b + c] = 1.0;
    }
    let learner = SvdLearner {
        train,
        cfg,
        svd,
        features,
        rank: k,
        adam: Adam::new(w.len(), cfg.learning_rate),
        w,
    };
    fit(learner, split, cfg, rng)
}
