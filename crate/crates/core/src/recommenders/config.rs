use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    LightGcn,
    Dgcf,
    UltraGcn,
    SvdGcn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::LightGcn, ModelKind::Dgcf, ModelKind::UltraGcn, ModelKind::SvdGcn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LightGcn => "LightGCN",
            ModelKind::Dgcf => "DGCF",
            ModelKind::UltraGcn => "UltraGCN",
            ModelKind::SvdGcn => "SVD-GCN",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "lightgcn" => Ok(ModelKind::LightGcn),
            "dgcf" => Ok(ModelKind::Dgcf),
            "ultragcn" => Ok(ModelKind::UltraGcn),
            "svdgcn" => Ok(ModelKind::SvdGcn),
            _ => Err(Error::InvalidArgument(format!("unknown model {s:?}"))),
        }
    }
}

/// Hyperparameters for one recommender. Fields that a model does not use
/// are ignored by it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub embedding_dim: usize,
    /// Std of the normal initialization of trainable embeddings.
    pub init_std: f64,

    pub layers: usize,
    pub intents: usize,
    pub routing_iterations: usize,

    /// Negatives per positive (UltraGCN; the ranking loss always uses one).
    pub negatives: usize,
    /// Multiplier on the averaged negative term of the constraint loss.
    pub negative_weight: f64,
    /// Constraint-loss coefficients: positives weigh `w1 + w2 * beta`,
    /// negatives `w3 + w4 * beta`.
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub item_topk: usize,
    pub item_loss_weight: f64,
    /// Adds an unweighted binary cross-entropy term to the UltraGCN objective.
    pub unweighted_term: bool,

    pub rank: usize,
    pub a1: f64,
    pub a2: f64,
    pub user_loss_weight: f64,
    pub svd_oversample: usize,
    pub svd_power_iterations: usize,
    pub svd_max_iterations: usize,
    pub svd_tolerance: f64,

    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub eval_interval: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            embedding_dim: 64,
            init_std: 0.1,
            layers: 3,
            intents: 4,
            routing_iterations: 2,
            negatives: 32,
            negative_weight: 300.0,
            w1: 1e-6,
            w2: 1.0,
            w3: 1e-6,
            w4: 1.0,
            item_topk: 10,
            item_loss_weight: 1.0,
            unweighted_term: false,
            rank: 64,
            a1: 1.0,
            a2: 2.0,
            user_loss_weight: 1.0,
            svd_oversample: 8,
            svd_power_iterations: 7,
            svd_max_iterations: 1000,
            svd_tolerance: 1e-6,
            learning_rate: 1e-3,
            l2: 1e-4,
            batch_size: 256,
            max_epochs: 200,
            patience: 5,
            eval_interval: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embedding_dim", self.embedding_dim),
            ("batch_size", self.batch_size),
            ("eval_interval", self.eval_interval),
            ("patience", self.patience),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) || !(self.init_std > 0.0) {
            return Err(Error::InvalidArgument(
                "learning_rate and init_std must be positive, l2 nonnegative".into(),
            ));
        }
        match self.kind {
            ModelKind::Dgcf => {
                if self.intents == 0 || self.embedding_dim % self.intents != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "embedding_dim {} is not divisible by {} intents",
                        self.embedding_dim, self.intents
                    )));
                }
            }
            ModelKind::UltraGcn => {
                if self.negatives == 0 {
                    return Err(Error::InvalidArgument("negatives must be positive".into()));
                }
            }
            ModelKind::SvdGcn => {
                if self.rank == 0 || self.svd_power_iterations == 0 || self.svd_max_iterations == 0 {
                    return Err(Error::InvalidArgument(
                        "rank and SVD iteration counts must be positive".into(),
                    ));
                }
            }
            ModelKind::LightGcn => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("svd_gcn".parse::<ModelKind>().unwrap(), ModelKind::SvdGcn);
    }

    #[test]
    fn dgcf_dimension_check() {
        let mut c = ModelConfig::new(ModelKind::Dgcf);
        c.intents = 5;
        assert!(c.validate().is_err());
        c.intents = 4;
        assert!(c.validate().is_ok());
    }
}
