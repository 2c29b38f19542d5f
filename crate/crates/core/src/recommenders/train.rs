use rand::seq::SliceRandom;
use rand::Rng as _;

use super::config::ModelConfig;
use super::model::{top_k, Embeddings, ModelExtras, TrainedModel};
use crate::error::{Error, Result};
use crate::evaluation::recall_at_k;
use crate::graph::BipartiteGraph;
use crate::seed::Rng;

/// Metric cutoff for validation-based early stopping.
pub const VALID_K: usize = 20;

pub(crate) trait Learner {
    /// Runs one pass over the train edges and returns the mean batch loss.
    fn train_epoch(&mut self, rng: &mut Rng) -> f64;
    /// Current user and item embeddings used for scoring.
    fn embeddings(&self) -> (Embeddings, Embeddings);
    fn extras(&self) -> ModelExtras;
}

/// Train edges shuffled and cut into batches.
pub(crate) fn batches(g: &BipartiteGraph, batch: usize, rng: &mut Rng) -> Vec<Vec<(u32, u32)>> {
    let mut edges: Vec<(u32, u32)> = g.edges().collect();
    edges.shuffle(rng);
    edges.chunks(batch).map(<[_]>::to_vec).collect()
}

/// Uniform item the user has not interacted with in `g`, or `None` when the
/// user has interacted with every item.
pub(crate) fn sample_negative(g: &BipartiteGraph, u: usize, rng: &mut Rng) -> Option<u32> {
    if g.user_degree(u) >= g.num_items() {
        return None;
    }
    loop {
        let j = rng.random_range(0..g.num_items() as u32);
        if !g.has_edge(u, j) {
            return Some(j);
        }
    }
}

/// Recall@20 on validation items, ranking everything except train items.
pub fn validation_recall(train: &BipartiteGraph, valid_by_user: &[Vec<u32>], user: &Embeddings, item: &Embeddings) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    let mut scores = vec![0.0; item.rows];
    for (u, valid) in valid_by_user.iter().enumerate() {
        if valid.is_empty() {
            continue;
        }
        let eu = user.row(u);
        for (i, s) in scores.iter_mut().enumerate() {
            *s = super::model::dot(eu, item.row(i));
        }
        let ranked = top_k(&scores, train.user_neighbors(u), VALID_K);
        total += recall_at_k(&ranked, valid, VALID_K);
        n += 1;
    }
    (n > 0).then(|| total / n as f64)
}

/// Epoch loop with validation every `eval_interval` epochs, patience-based
/// early stopping and best-validation snapshotting.
pub(crate) fn fit<L: Learner>(
    mut learner: L,
    split: &super::Split,
    cfg: &ModelConfig,
    rng: &mut Rng,
) -> Result<TrainedModel> {
    let mut history = Vec::new();
    let mut best: Option<(f64, Embeddings, Embeddings, ModelExtras)> = None;
    let mut stale = 0;
    let mut stopped_early = false;
    let mut epochs = 0;
    for epoch in 1..=cfg.max_epochs {
        let loss = learner.train_epoch(rng);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(loss);
        epochs = epoch;
        if epoch % cfg.eval_interval != 0 {
            continue;
        }
        let (ue, ie) = learner.embeddings();
        if !ue.is_finite() || !ie.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let Some(recall) = validation_recall(&split.train, &split.valid_by_user, &ue, &ie) else {
            continue;
        };
        log::debug!("{} epoch {epoch}: loss {loss:.6}, valid recall@{VALID_K} {recall:.4}", cfg.kind);
        if best.as_ref().is_none_or(|b| recall > b.0) {
            best = Some((recall, ue, ie, learner.extras()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let (best_valid_recall, user_embeddings, item_embeddings, extras) = match best {
        Some(b) => b,
        None => {
            let (ue, ie) = learner.embeddings();
            if !ue.is_finite() || !ie.is_finite() {
                return Err(Error::Diverged { epoch: epochs });
            }
            (f64::NAN, ue, ie, learner.extras())
        }
    };
    Ok(TrainedModel {
        kind: cfg.kind,
        user_embeddings,
        item_embeddings,
        extras,
        epochs_trained: epochs,
        stopped_early,
        best_valid_recall,
        loss_history: history,
    })
}
