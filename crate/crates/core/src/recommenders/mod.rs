//! Graph collaborative filtering recommenders trained from scratch on a
//! train/validation/test split of one sampled dataset.

mod config;
mod gcn;
mod model;
pub mod optim;
pub mod propagation;
mod split;
pub mod svd;
mod svdgcn;
mod train;
mod ultragcn;

pub use config::{ModelConfig, ModelKind};
pub use gcn::{train_dgcf, train_lightgcn};
pub use model::{dot, top_k, Embeddings, ModelExtras, TrainedModel};
pub use split::{split_dataset, Split, TEST_FRACTION, VALID_FRACTION};
pub use svdgcn::{spectral_features, svd_options, train_svdgcn};
pub use train::{validation_recall, VALID_K};
pub use ultragcn::{constraint_weight, item_neighbors, train_ultragcn, ItemNeighbors};

use crate::error::Result;
use crate::seed::Rng;

/// Trains the model named by `cfg.kind`.
pub fn train_model(split: &Split, cfg: &ModelConfig, rng: &mut Rng) -> Result<TrainedModel> {
    match cfg.kind {
        ModelKind::LightGcn => train_lightgcn(split, cfg, rng),
        ModelKind::Dgcf => train_dgcf(split, cfg, rng),
        ModelKind::UltraGcn => train_ultragcn(split, cfg, rng),
        ModelKind::SvdGcn => train_svdgcn(split, cfg, rng),
    }
}

pub const METRICS_HEADER: &str = "sample_id,model,recall@20,ndcg@20,epochs_trained,stopped_early";

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub sample_id: u64,
    pub model: ModelKind,
    pub recall: f64,
    pub ndcg: f64,
    pub epochs_trained: usize,
    pub stopped_early: bool,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.sample_id, self.model, self.recall, self.ndcg, self.epochs_trained, self.stopped_early
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        use crate::error::Error;
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = || Error::InvalidArgument(format!("bad metrics row {line:?}"));
        if f.len() != 6 {
            return Err(bad());
        }
        Ok(MetricsRow {
            sample_id: f[0].parse().map_err(|_| bad())?,
            model: f[1].parse()?,
            recall: f[2].parse().map_err(|_| bad())?,
            ndcg: f[3].parse().map_err(|_| bad())?,
            epochs_trained: f[4].parse().map_err(|_| bad())?,
            stopped_early: f[5].parse().map_err(|_| bad())?,
        })
    }
}
