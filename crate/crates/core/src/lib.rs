//! Topology-aware analysis of graph collaborative filtering datasets.
//!
//! The crate samples sub-datasets from a bipartite user-item graph, measures
//! their classical and topological characteristics, trains graph-based
//! recommenders on them and fits a linear explanatory model relating the
//! characteristics to recommendation accuracy.

pub mod characteristics;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod graph;
pub mod pipeline;
pub mod recommenders;
pub mod sampling;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
