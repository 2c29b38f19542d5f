//! Sub-dataset generation by node-dropout and edge-dropout.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::seed::{derive_seed, rng_from_seed};

/// Attempts per sample before a degenerate draw becomes an error.
pub const MAX_ATTEMPTS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    NodeDropout,
    EdgeDropout,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::NodeDropout, Strategy::EdgeDropout];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::NodeDropout => "node_dropout",
            Strategy::EdgeDropout => "edge_dropout",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "node_dropout" | "node" | "nodedropout" => Ok(Strategy::NodeDropout),
            "edge_dropout" | "edge" | "edgedropout" => Ok(Strategy::EdgeDropout),
            other => Err(Error::InvalidArgument(format!("unknown sampling strategy {other:?}"))),
        }
    }
}

/// Provenance of one sub-dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub sample_id: u64,
    pub strategy: Strategy,
    pub mu: f64,
    /// Seed of the draw that produced the graph.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledDataset {
    pub spec: SampleSpec,
    pub graph: BipartiteGraph,
}

/// `x` rounded half-up to an integer count.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

fn check_mu(mu: f64) -> Result<()> {
    if (0.0..1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dropout rate {mu} outside [0, 1)")))
    }
}

/// Number of nodes node-dropout keeps before isolated nodes are pruned.
pub fn node_dropout_count(g: &BipartiteGraph, mu: f64) -> usize {
    round_half_up((g.num_users() + g.num_items()) as f64 * (1.0 - mu))
}

/// Number of edges edge-dropout keeps.
pub fn edge_dropout_count(g: &BipartiteGraph, mu: f64) -> usize {
    round_half_up(g.num_edges() as f64 * (1.0 - mu))
}

/// Keeps a uniform subset of `round((U + I)(1 - mu))` nodes, masks the
/// adjacency to them and removes nodes left without edges.
pub fn node_dropout<R: Rng + ?Sized>(g: &BipartiteGraph, mu: f64, rng: &mut R) -> Result<BipartiteGraph> {
    check_mu(mu)?;
    let (nu, ni) = (g.num_users(), g.num_items());
    let keep = node_dropout_count(g, mu).min(nu + ni);
    if keep == 0 {
        return Err(Error::DegenerateSample("no nodes retained".into()));
    }
    let mut kept = vec![false; nu + ni];
    for v in index::sample(rng, nu + ni, keep) {
        kept[v] = true;
    }
    let edges: Vec<(u32, u32)> = g
        .edges()
        .filter(|&(u, i)| kept[u as usize] && kept[nu + i as usize])
        .collect();
    if edges.is_empty() {
        return Err(Error::DegenerateSample("no edge survives node masking".into()));
    }
    Ok(g.edge_subgraph(&edges))
}

/// Keeps a uniform subset of `round(E(1 - mu))` edges and the nodes they touch.
pub fn edge_dropout<R: Rng + ?Sized>(g: &BipartiteGraph, mu: f64, rng: &mut R) -> Result<BipartiteGraph> {
    check_mu(mu)?;
    let keep = edge_dropout_count(g, mu).min(g.num_edges());
    if keep == 0 {
        return Err(Error::DegenerateSample("no edges retained".into()));
    }
    let all: Vec<(u32, u32)> = g.edges().collect();
    let mut picked: Vec<usize> = index::sample(rng, all.len(), keep).into_vec();
    picked.sort_unstable();
    let edges: Vec<(u32, u32)> = picked.into_iter().map(|e| all[e]).collect();
    Ok(g.edge_subgraph(&edges))
}

pub fn apply<R: Rng + ?Sized>(
    g: &BipartiteGraph,
    strategy: Strategy,
    mu: f64,
    rng: &mut R,
) -> Result<BipartiteGraph> {
    match strategy {
        Strategy::NodeDropout => node_dropout(g, mu, rng),
        Strategy::EdgeDropout => edge_dropout(g, mu, rng),
    }
}

/// Settings for a batch of sub-datasets.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub count: usize,
    pub mu_range: (f64, f64),
    pub strategies: Vec<Strategy>,
    pub master_seed: u64,
    /// Seed-derivation label; distinct pools of the same run use distinct labels.
    pub label: String,
    /// Identifier of the first sample; ids are consecutive.
    pub first_id: u64,
}

impl SamplingPlan {
    pub fn new(count: usize, master_seed: u64) -> Self {
        SamplingPlan {
            count,
            mu_range: (0.7, 0.9),
            strategies: Strategy::ALL.to_vec(),
            master_seed,
            label: "sample".into(),
            first_id: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mu_range;
        if self.count == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("empty dropout range [{lo}, {hi}]")));
        }
        check_mu(lo)?;
        check_mu(hi)?;
        if self.strategies.is_empty() {
            return Err(Error::InvalidArgument("no sampling strategy enabled".into()));
        }
        Ok(())
    }

    /// Draws the sample with the given id. Its dropout rate and strategy
    /// come from the sample's own seed; each retry redraws only the dropout.
    pub fn sample_one(&self, g: &BipartiteGraph, sample_id: u64) -> Result<SampledDataset> {
        let seed = derive_seed(self.master_seed, &self.label, sample_id);
        let mut rng = rng_from_seed(seed);
        let (lo, hi) = self.mu_range;
        let mu = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let strategy = self.strategies[rng.random_range(0..self.strategies.len())];
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            let draw_seed = if attempt == 0 { seed } else { derive_seed(seed, "retry", attempt) };
            match apply(g, strategy, mu, &mut rng_from_seed(draw_seed)) {
                Ok(graph) => {
                    return Ok(SampledDataset {
                        spec: SampleSpec {
                            sample_id,
                            strategy,
                            mu,
                            seed: draw_seed,
                        },
                        graph,
                    })
                }
                Err(e @ Error::DegenerateSample(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> {
        self.first_id..self.first_id + self.count as u64
    }
}

/// Generates the plan's samples. Samples are independent and computed in
/// parallel; the result is identical to a serial run.
pub fn generate_samples(g: &BipartiteGraph, plan: &SamplingPlan) -> Result<Vec<SampledDataset>> {
    plan.validate()?;
    plan.ids()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|id| plan.sample_one(g, id))
        .collect()
}

/// How many node- and edge-dropout samples a mixing rate selects.
pub fn mix_counts(alpha: f64, total: usize) -> Result<(usize, usize)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let node = round_half_up((1.0 - alpha) * total as f64).min(total);
    Ok((node, total - node))
}

/// Takes the leading node- and edge-dropout samples in the proportion set by
/// `alpha`, node samples first.
pub fn mix_for_alpha<'a>(
    node_samples: &'a [SampledDataset],
    edge_samples: &'a [SampledDataset],
    alpha: f64,
    total: usize,
) -> Result<Vec<&'a SampledDataset>> {
    let (need_node, need_edge) = mix_counts(alpha, total)?;
    if need_node > node_samples.len() || need_edge > edge_samples.len() {
        return Err(Error::InsufficientPool {
            need_node,
            need_edge,
            have_node: node_samples.len(),
            have_edge: edge_samples.len(),
        });
    }
    Ok(node_samples[..need_node]
        .iter()
        .chain(&edge_samples[..need_edge])
        .collect())
}

pub const MANIFEST_HEADER: &str = "sample_id,strategy,mu,seed,num_users,num_items,num_interactions";

pub fn manifest_row(s: &SampledDataset) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.spec.sample_id,
        s.spec.strategy,
        s.spec.mu,
        s.spec.seed,
        s.graph.num_users(),
        s.graph.num_items(),
        s.graph.num_edges()
    )
}

pub fn manifest_csv<'a>(samples: impl IntoIterator<Item = &'a SampledDataset>) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&manifest_row(s));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn grid(nu: usize, ni: usize) -> BipartiteGraph {
        let edges = (0..nu as u32)
            .flat_map(|u| (0..ni as u32).filter(move |i| (u + i) % 3 != 0).map(move |i| (u, i)))
            .collect();
        BipartiteGraph::from_edges(nu, ni, edges).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let g = grid(10, 12);
        assert_eq!(node_dropout(&g, 0.0, &mut rng_from_seed(1)).unwrap(), g);
        assert_eq!(edge_dropout(&g, 0.0, &mut rng_from_seed(1)).unwrap(), g);
    }

    #[test]
    fn node_count_arithmetic() {
        let g = grid(500, 500);
        assert_eq!(node_dropout_count(&g, 0.8), 200);
        let e = g.num_edges();
        assert_eq!(edge_dropout_count(&g, 0.7), round_half_up(e as f64 * 0.3));
    }

    #[test]
    fn edge_dropout_keeps_exact_count() {
        let edges = (0..1000u32).map(|e| (e % 40, e / 40)).collect();
        let g = BipartiteGraph::from_edges(40, 25, edges).unwrap();
        assert_eq!(g.num_edges(), 1000);
        let s = edge_dropout(&g, 0.7, &mut rng_from_seed(3)).unwrap();
        assert_eq!(s.num_edges(), 300);
    }

    #[test]
    fn rate_outside_range_is_rejected() {
        let g = grid(4, 4);
        assert!(node_dropout(&g, 1.0, &mut rng_from_seed(0)).is_err());
        assert!(edge_dropout(&g, -0.1, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn degenerate_draw_is_an_error() {
        let g = BipartiteGraph::from_edges(1, 1, vec![(0, 0)]).unwrap();
        // keeps round(2 * 0.2) = 0 nodes
        assert!(matches!(
            node_dropout(&g, 0.8, &mut rng_from_seed(0)),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            edge_dropout(&g, 0.9, &mut rng_from_seed(0)),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn restricted_strategy_set() {
        let g = grid(20, 20);
        let mut plan = SamplingPlan::new(3, 11);
        plan.strategies = vec![Strategy::EdgeDropout];
        let samples = generate_samples(&g, &plan).unwrap();
        assert_eq!(samples.len(), 3);
        assert!(samples.iter().all(|s| s.spec.strategy == Strategy::EdgeDropout));
        assert!(samples.iter().all(|s| (0.7..=0.9).contains(&s.spec.mu)));
    }

    #[test]
    fn mixing_arithmetic() {
        assert_eq!(mix_counts(0.3, 600).unwrap(), (420, 180));
        assert_eq!(mix_counts(0.0, 600).unwrap(), (600, 0));
        assert_eq!(mix_counts(1.0, 600).unwrap(), (0, 600));
        assert_eq!(mix_counts(0.7, 600).unwrap(), (180, 420));
        assert!(mix_counts(1.5, 10).is_err());
    }

    #[test]
    fn mixing_checks_pool_sizes() {
        let g = grid(10, 10);
        let node = generate_samples(&g, &SamplingPlan { strategies: vec![Strategy::NodeDropout], ..SamplingPlan::new(2, 1) }).unwrap();
        let edge = generate_samples(&g, &SamplingPlan { strategies: vec![Strategy::EdgeDropout], ..SamplingPlan::new(2, 2) }).unwrap();
        let mixed = mix_for_alpha(&node, &edge, 0.5, 4).unwrap();
        assert_eq!(mixed.len(), 4);
        assert_eq!(mixed[0].spec.strategy, Strategy::NodeDropout);
        assert_eq!(mixed[3].spec.strategy, Strategy::EdgeDropout);
        assert!(matches!(
            mix_for_alpha(&node, &edge, 0.0, 4),
            Err(Error::InsufficientPool { need_node: 4, .. })
        ));
    }

    #[test]
    fn manifest_has_declared_header() {
        let g = grid(10, 10);
        let samples = generate_samples(&g, &SamplingPlan::new(2, 5)).unwrap();
        let csv = manifest_csv(&samples);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(MANIFEST_HEADER));
        assert_eq!(lines.count(), 2);
    }
}
