use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::characteristics::{Characteristic, CharacteristicsConfig, EmptyNeighborhood};
use crate::error::{Error, Result};
use crate::explain::RankPolicy;
use crate::recommenders::{ModelConfig, ModelKind};
use crate::sampling::Strategy;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "TOPOCF_OUT";

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    /// Tab-separated `user<TAB>item` interaction log.
    File(PathBuf),
    ScaleFree {
        users: usize,
        items: usize,
        interactions: usize,
        exponent: f64,
    },
    TwoBlock,
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::File(p) => write!(f, "file:{}", p.display()),
            DatasetSource::ScaleFree {
                users,
                items,
                interactions,
                exponent,
            } => write!(f, "scale_free:{users}:{items}:{interactions}:{exponent}"),
            DatasetSource::TwoBlock => f.write_str("two_block"),
        }
    }
}

/// What produces the regression target of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Model(ModelKind),
    /// Known linear function of the characteristics plus Gaussian noise,
    /// used to validate the pipeline end to end without training.
    Planted,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Model(k) => k.as_str(),
            Target::Planted => "planted",
        }
    }

    /// File-system friendly name.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase().replace('-', "")
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("planted") {
            Ok(Target::Planted)
        } else {
            Ok(Target::Model(s.parse()?))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Recall,
    Ndcg,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Recall => "recall",
            Metric::Ndcg => "ndcg",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedTarget {
    pub terms: Vec<(Characteristic, f64)>,
    pub noise_std: f64,
}

impl Default for PlantedTarget {
    fn default() -> Self {
        PlantedTarget {
            terms: vec![(Characteristic::DensityLog, 0.3), (Characteristic::GiniItem, 0.5)],
            noise_std: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub master_seed: u64,
    pub samples: usize,
    pub mu_range: (f64, f64),
    pub strategies: Vec<Strategy>,
    pub targets: Vec<Target>,
    pub models: BTreeMap<ModelKind, ModelConfig>,
    pub planted: PlantedTarget,
    pub metric: Metric,
    pub k: usize,
    pub standardize: bool,
    pub rank_policy: RankPolicy,
    pub alphas: Vec<f64>,
    /// Samples per regression in the mixing sweep; each pool holds this many.
    pub rq2_samples: usize,
    pub output: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub characteristics: CharacteristicsConfig,
    pub per_user_metrics: bool,
    pub save_embeddings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::ScaleFree {
                users: 1000,
                items: 1000,
                interactions: 12_000,
                exponent: 0.7,
            },
            master_seed: 42,
            samples: 40,
            mu_range: (0.7, 0.9),
            strategies: Strategy::ALL.to_vec(),
            targets: ModelKind::ALL.iter().map(|&k| Target::Model(k)).collect(),
            models: ModelKind::ALL.iter().map(|&k| (k, ModelConfig::new(k))).collect(),
            planted: PlantedTarget::default(),
            metric: Metric::Recall,
            k: 20,
            standardize: true,
            rank_policy: RankPolicy::DropAliased,
            alphas: vec![0.0, 0.3, 0.7, 1.0],
            rq2_samples: 40,
            output: PathBuf::from("out"),
            jobs: 0,
            characteristics: CharacteristicsConfig::default(),
            per_user_metrics: false,
            save_embeddings: false,
        }
    }
}

fn cfg_err(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {what}"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| cfg_err(key, value, "not a valid number"))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(key, value, "expected true or false")),
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn set_model_field(cfg: &mut ModelConfig, field: &str, key: &str, value: &str) -> Result<()> {
    match field {
        "embedding_dim" => cfg.embedding_dim = num(key, value)?,
        "init_std" => cfg.init_std = num(key, value)?,
        "layers" => cfg.layers = num(key, value)?,
        "intents" => cfg.intents = num(key, value)?,
        "routing_iterations" => cfg.routing_iterations = num(key, value)?,
        "negatives" => cfg.negatives = num(key, value)?,
        "negative_weight" => cfg.negative_weight = num(key, value)?,
        "w1" => cfg.w1 = num(key, value)?,
        "w2" => cfg.w2 = num(key, value)?,
        "w3" => cfg.w3 = num(key, value)?,
        "w4" => cfg.w4 = num(key, value)?,
        "item_topk" => cfg.item_topk = num(key, value)?,
        "item_loss_weight" => cfg.item_loss_weight = num(key, value)?,
        "unweighted_term" => cfg.unweighted_term = flag(key, value)?,
        "rank" => cfg.rank = num(key, value)?,
        "a1" => cfg.a1 = num(key, value)?,
        "a2" => cfg.a2 = num(key, value)?,
        "user_loss_weight" => cfg.user_loss_weight = num(key, value)?,
        "svd_oversample" => cfg.svd_oversample = num(key, value)?,
        "svd_power_iterations" => cfg.svd_power_iterations = num(key, value)?,
        "svd_max_iterations" => cfg.svd_max_iterations = num(key, value)?,
        "svd_tolerance" => cfg.svd_tolerance = num(key, value)?,
        "learning_rate" => cfg.learning_rate = num(key, value)?,
        "l2" => cfg.l2 = num(key, value)?,
        "batch_size" => cfg.batch_size = num(key, value)?,
        "max_epochs" => cfg.max_epochs = num(key, value)?,
        "patience" => cfg.patience = num(key, value)?,
        "eval_interval" => cfg.eval_interval = num(key, value)?,
        _ => return Err(Error::Config(format!("unknown model setting {key:?}"))),
    }
    Ok(())
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "dataset" => {
                self.dataset = match value {
                    "synthetic:scale_free" => match self.dataset {
                        DatasetSource::ScaleFree { .. } => self.dataset.clone(),
                        _ => ExperimentConfig::default().dataset,
                    },
                    "synthetic:two_block" => DatasetSource::TwoBlock,
                    path => DatasetSource::File(PathBuf::from(path)),
                }
            }
            "synthetic.users" | "synthetic.items" | "synthetic.interactions" | "synthetic.exponent" => {
                let DatasetSource::ScaleFree {
                    users,
                    items,
                    interactions,
                    exponent,
                } = &mut self.dataset
                else {
                    return Err(Error::Config(format!("{key} needs dataset = synthetic:scale_free")));
                };
                match key {
                    "synthetic.users" => *users = num(key, value)?,
                    "synthetic.items" => *items = num(key, value)?,
                    "synthetic.interactions" => *interactions = num(key, value)?,
                    _ => *exponent = num(key, value)?,
                }
            }
            "seed" | "master_seed" => self.master_seed = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "mu_min" => self.mu_range.0 = num(key, value)?,
            "mu_max" => self.mu_range.1 = num(key, value)?,
            "strategies" => self.strategies = list(value).map(str::parse).collect::<Result<_>>()?,
            "models" => self.targets = list(value).map(str::parse).collect::<Result<_>>()?,
            "planted" => {
                self.planted.terms = list(value)
                    .map(|t| {
                        let (name, coef) = t
                            .rsplit_once(':')
                            .ok_or_else(|| cfg_err(key, value, "expected name:coefficient pairs"))?;
                        Ok((name.parse()?, num(key, coef)?))
                    })
                    .collect::<Result<_>>()?;
            }
            "planted_noise" => self.planted.noise_std = num(key, value)?,
            "metric" => {
                self.metric = match value.to_ascii_lowercase().as_str() {
                    "recall" => Metric::Recall,
                    "ndcg" => Metric::Ndcg,
                    _ => return Err(cfg_err(key, value, "expected recall or ndcg")),
                }
            }
            "k" => self.k = num(key, value)?,
            "standardize" => self.standardize = flag(key, value)?,
            "rank_policy" => {
                self.rank_policy = match value {
                    "drop_aliased" => RankPolicy::DropAliased,
                    "error" => RankPolicy::Error,
                    _ => return Err(cfg_err(key, value, "expected drop_aliased or error")),
                }
            }
            "alphas" => self.alphas = list(value).map(|v| num(key, v)).collect::<Result<_>>()?,
            "rq2_samples" => self.rq2_samples = num(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "jobs" => self.jobs = num(key, value)?,
            "projection_cap" => self.characteristics.projection_cap = num(key, value)?,
            "empty_neighborhood" => {
                self.characteristics.empty_neighborhood = match value {
                    "zero" => EmptyNeighborhood::Zero,
                    "exclude" => EmptyNeighborhood::Exclude,
                    _ => return Err(cfg_err(key, value, "expected zero or exclude")),
                }
            }
            "per_user_metrics" => self.per_user_metrics = flag(key, value)?,
            "save_embeddings" => self.save_embeddings = flag(key, value)?,
            _ => {
                let Some((scope, field)) = key.split_once('.') else {
                    return Err(Error::Config(format!("unknown setting {key:?}")));
                };
                if scope == "model" {
                    for cfg in self.models.values_mut() {
                        set_model_field(cfg, field, key, value)?;
                    }
                } else {
                    let kind: ModelKind = scope
                        .parse()
                        .map_err(|_| Error::Config(format!("unknown setting {key:?}")))?;
                    let cfg = self.models.entry(kind).or_insert_with(|| ModelConfig::new(kind));
                    set_model_field(cfg, field, key, value)?;
                }
            }
        }
        Ok(())
    }

    /// Parses flat `key = value` text over the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Replaces the output directory with the environment override if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            self.output = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        let (lo, hi) = self.mu_range;
        if !(0.0..1.0).contains(&lo) || !(0.0..1.0).contains(&hi) || lo > hi {
            return bad(format!("dropout range [{lo}, {hi}] must lie in [0, 1)"));
        }
        if self.strategies.is_empty() {
            return bad("no sampling strategy enabled".into());
        }
        if self.targets.is_empty() {
            return bad("no models selected".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha {a} outside [0, 1]"));
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.planted.noise_std >= 0.0) {
            return bad("planted_noise must be nonnegative".into());
        }
        for t in &self.targets {
            if let Target::Model(kind) = t {
                self.model(*kind).validate().map_err(|e| Error::Config(format!("{kind}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn model(&self, kind: ModelKind) -> ModelConfig {
        self.models.get(&kind).cloned().unwrap_or_else(|| ModelConfig::new(kind))
    }

    /// Canonical text of every setting, hashed into the ledger.
    pub fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}
