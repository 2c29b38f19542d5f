use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no interactions")]
    NoInteractions,

    #[error("malformed interaction on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("projection exceeds the edge cap of {cap} (hub node {hub:?} with degree {hub_degree})")]
    ProjectionCap {
        cap: usize,
        hub: String,
        hub_degree: usize,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient sample pool: need {need_node} node-dropout and {need_edge} edge-dropout samples, have {have_node} and {have_edge}")]
    InsufficientPool {
        need_node: usize,
        need_edge: usize,
        have_node: usize,
        have_edge: usize,
    },

    #[error("characteristic {0} has zero variance")]
    ZeroVariance(String),

    #[error("too few usable rows: {have} (need at least {need})")]
    TooFewRows { have: usize, need: usize },

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("empty test set")]
    EmptyTestSet,

    #[error("no users eligible for evaluation")]
    NoEvaluatedUsers,

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("truncated SVD did not converge after {iterations} iterations (residual {residual:e})")]
    SvdNotConverged { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
