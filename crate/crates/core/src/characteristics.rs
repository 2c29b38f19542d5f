//! Classical and topological dataset characteristics.
//!
//! Five classical measures (space size, shape, density, user and item Gini)
//! and six topological ones (average degree, average bipartite clustering
//! coefficient and degree assortativity of the two projections). Fields that
//! are log10-rescaled carry their raw value alongside.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{project, BipartiteGraph, Partition, ProjectedGraph, DEFAULT_PROJECTION_CAP};

/// The eleven characteristics, in reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Characteristic {
    SpaceSizeLog,
    ShapeLog,
    DensityLog,
    GiniUser,
    GiniItem,
    AvgDegreeUserLog,
    AvgDegreeItemLog,
    AvgClustCUserLog,
    AvgClustCItemLog,
    AssortUser,
    AssortItem,
}

impl Characteristic {
    pub const ALL: [Characteristic; 11] = [
        Characteristic::SpaceSizeLog,
        Characteristic::ShapeLog,
        Characteristic::DensityLog,
        Characteristic::GiniUser,
        Characteristic::GiniItem,
        Characteristic::AvgDegreeUserLog,
        Characteristic::AvgDegreeItemLog,
        Characteristic::AvgClustCUserLog,
        Characteristic::AvgClustCItemLog,
        Characteristic::AssortUser,
        Characteristic::AssortItem,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Characteristic::SpaceSizeLog => "SpaceSize_log",
            Characteristic::ShapeLog => "Shape_log",
            Characteristic::DensityLog => "Density_log",
            Characteristic::GiniUser => "Gini-U",
            Characteristic::GiniItem => "Gini-I",
            Characteristic::AvgDegreeUserLog => "AvgDegree-U_log",
            Characteristic::AvgDegreeItemLog => "AvgDegree-I_log",
            Characteristic::AvgClustCUserLog => "AvgClustC-U_log",
            Characteristic::AvgClustCItemLog => "AvgClustC-I_log",
            Characteristic::AssortUser => "Assort-U",
            Characteristic::AssortItem => "Assort-I",
        }
    }

    pub fn is_log_scaled(self) -> bool {
        !matches!(
            self,
            Characteristic::GiniUser
                | Characteristic::GiniItem
                | Characteristic::AssortUser
                | Characteristic::AssortItem
        )
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Characteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Characteristic::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown characteristic {s:?}")))
    }
}

/// How nodes without any same-partition co-neighbor enter the partition
/// average of the clustering coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmptyNeighborhood {
    /// Counted with a coefficient of zero.
    #[default]
    Zero,
    /// Left out of the average.
    Exclude,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicsConfig {
    pub projection_cap: usize,
    pub empty_neighborhood: EmptyNeighborhood,
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        CharacteristicsConfig {
            projection_cap: DEFAULT_PROJECTION_CAP,
            empty_neighborhood: EmptyNeighborhood::Zero,
        }
    }
}

/// Pre-log10 values of the rescaled characteristics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawCharacteristics {
    pub space_size: f64,
    pub shape: f64,
    pub density: f64,
    pub avg_degree_user: f64,
    pub avg_degree_item: f64,
    pub avg_clustc_user: f64,
    pub avg_clustc_item: f64,
}

/// The characteristic values of one (sub-)dataset. `None` marks a value that
/// is undefined on this graph (zero clustering, zero-variance assortativity).
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicVector {
    pub space_size_log: f64,
    pub shape_log: f64,
    pub density_log: f64,
    pub gini_user: f64,
    pub gini_item: f64,
    pub avg_degree_user_log: f64,
    pub avg_degree_item_log: f64,
    pub avg_clustc_user_log: Option<f64>,
    pub avg_clustc_item_log: Option<f64>,
    pub assort_user: Option<f64>,
    pub assort_item: Option<f64>,
    pub raw: RawCharacteristics,
}

impl CharacteristicVector {
    pub fn get(&self, c: Characteristic) -> Option<f64> {
        match c {
            Characteristic::SpaceSizeLog => Some(self.space_size_log),
            Characteristic::ShapeLog => Some(self.shape_log),
            Characteristic::DensityLog => Some(self.density_log),
            Characteristic::GiniUser => Some(self.gini_user),
            Characteristic::GiniItem => Some(self.gini_item),
            Characteristic::AvgDegreeUserLog => Some(self.avg_degree_user_log),
            Characteristic::AvgDegreeItemLog => Some(self.avg_degree_item_log),
            Characteristic::AvgClustCUserLog => self.avg_clustc_user_log,
            Characteristic::AvgClustCItemLog => self.avg_clustc_item_log,
            Characteristic::AssortUser => self.assort_user,
            Characteristic::AssortItem => self.assort_item,
        }
        .filter(|v| v.is_finite())
    }

    pub fn values(&self) -> [Option<f64>; 11] {
        Characteristic::ALL.map(|c| self.get(c))
    }

    /// Characteristics that are undefined on this graph.
    pub fn undefined(&self) -> Vec<Characteristic> {
        Characteristic::ALL
            .into_iter()
            .filter(|&c| self.get(c).is_none())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.undefined().is_empty()
    }

    /// Rebuilds a vector from the eleven reported values. Raw companions are
    /// recovered by inverting log10 where the value is defined.
    pub fn from_values(values: [Option<f64>; 11]) -> Self {
        let v = |c: Characteristic| values[c.index()];
        let req = |c: Characteristic| v(c).unwrap_or(f64::NAN);
        let pow = |x: Option<f64>| x.map_or(0.0, |x| 10f64.powf(x));
        CharacteristicVector {
            space_size_log: req(Characteristic::SpaceSizeLog),
            shape_log: req(Characteristic::ShapeLog),
            density_log: req(Characteristic::DensityLog),
            gini_user: req(Characteristic::GiniUser),
            gini_item: req(Characteristic::GiniItem),
            avg_degree_user_log: req(Characteristic::AvgDegreeUserLog),
            avg_degree_item_log: req(Characteristic::AvgDegreeItemLog),
            avg_clustc_user_log: v(Characteristic::AvgClustCUserLog),
            avg_clustc_item_log: v(Characteristic::AvgClustCItemLog),
            assort_user: v(Characteristic::AssortUser),
            assort_item: v(Characteristic::AssortItem),
            raw: RawCharacteristics {
                space_size: pow(v(Characteristic::SpaceSizeLog)),
                shape: pow(v(Characteristic::ShapeLog)),
                density: pow(v(Characteristic::DensityLog)),
                avg_degree_user: pow(v(Characteristic::AvgDegreeUserLog)),
                avg_degree_item: pow(v(Characteristic::AvgDegreeItemLog)),
                avg_clustc_user: pow(v(Characteristic::AvgClustCUserLog)),
                avg_clustc_item: pow(v(Characteristic::AvgClustCItemLog)),
            },
        }
    }
}

/// Gini coefficient of a non-negative sequence: the sum of pairwise absolute
/// differences over `n * sum`. Uses the sorted-rank identity
/// `sum_{i<j} |x_i - x_j| = sum_k (2k - n - 1) x_(k)` (1-based ranks).
pub fn gini(values: &[usize]) -> f64 {
    let n = values.len();
    let total: usize = values.iter().sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut acc: i128 = 0;
    for (k, &x) in sorted.iter().enumerate() {
        acc += (2 * (k as i128 + 1) - n as i128 - 1) * x as i128;
    }
    acc as f64 / (n as f64 * total as f64)
}

/// The classical characteristics of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Classical {
    pub space_size_log: f64,
    pub shape_log: f64,
    pub density_log: f64,
    pub gini_user: f64,
    pub gini_item: f64,
    pub space_size: f64,
    pub shape: f64,
    pub density: f64,
}

/// Space size is measured in thousands of users and items,
/// `sqrt((U / 1000) * (I / 1000))`.
pub fn classical_from_counts(users: usize, items: usize, edges: usize) -> (f64, f64, f64) {
    let (u, i, e) = (users as f64, items as f64, edges as f64);
    let space = (u * i).sqrt() / 1000.0;
    (space, u / i, e / (u * i))
}

pub fn classical_characteristics(g: &BipartiteGraph) -> Result<Classical> {
    let (u, i, e) = (g.num_users(), g.num_items(), g.num_edges());
    if u == 0 || i == 0 || e == 0 {
        return Err(Error::InvalidArgument("classical characteristics need a non-empty graph".into()));
    }
    let (space_size, shape, density) = classical_from_counts(u, i, e);
    Ok(Classical {
        space_size_log: space_size.log10(),
        shape_log: shape.log10(),
        density_log: density.log10(),
        gini_user: gini(&g.degrees(Partition::User)),
        gini_item: gini(&g.degrees(Partition::Item)),
        space_size,
        shape,
        density,
    })
}

/// Raw and log10 value of a rescaled characteristic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rescaled {
    pub raw: f64,
    pub log: Option<f64>,
}

impl Rescaled {
    fn new(raw: f64) -> Self {
        Rescaled {
            raw,
            log: (raw > 0.0).then(|| raw.log10()),
        }
    }
}

/// Mean number of first-order neighbors over a partition.
pub fn average_degree(g: &BipartiteGraph, partition: Partition) -> Rescaled {
    let n = g.count(partition);
    if n == 0 {
        return Rescaled::new(0.0);
    }
    Rescaled::new(g.num_edges() as f64 / n as f64)
}

/// Per-node bipartite clustering coefficient: the mean Jaccard overlap of a
/// node's neighborhood with each same-partition node it shares a neighbor
/// with. `None` for nodes without such co-neighbors.
pub fn node_clustering(g: &BipartiteGraph, partition: Partition) -> Vec<Option<f64>> {
    let other = partition.opposite();
    let n = g.count(partition);
    let mut shared = vec![0u32; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let own = g.neighbors(partition, v);
        for &x in own {
            for &w in g.neighbors(other, x as usize) {
                if w as usize == v {
                    continue;
                }
                if shared[w as usize] == 0 {
                    touched.push(w);
                }
                shared[w as usize] += 1;
            }
        }
        if touched.is_empty() {
            out.push(None);
            continue;
        }
        touched.sort_unstable();
        let dv = own.len() as f64;
        let mut sum = 0.0;
        for &w in &touched {
            let c = shared[w as usize] as f64;
            let dw = g.neighbors(partition, w as usize).len() as f64;
            sum += c / (dv + dw - c);
            shared[w as usize] = 0;
        }
        out.push(Some(sum / touched.len() as f64));
        touched.clear();
    }
    out
}

/// Partition average of the clustering coefficient. The log is undefined
/// when the average is zero.
pub fn average_clustering_coefficient(
    g: &BipartiteGraph,
    partition: Partition,
    empty: EmptyNeighborhood,
) -> Rescaled {
    let per_node = node_clustering(g, partition);
    let (sum, count) = per_node.iter().fold((0.0, 0usize), |(s, c), v| match (v, empty) {
        (Some(x), _) => (s + x, c + 1),
        (None, EmptyNeighborhood::Zero) => (s, c + 1),
        (None, EmptyNeighborhood::Exclude) => (s, c),
    });
    if count == 0 {
        return Rescaled::new(0.0);
    }
    Rescaled::new(sum / count as f64)
}

/// Joint distribution of endpoint degrees over the symmetric edge list of a
/// projection.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeMixingTable {
    /// Distinct endpoint degrees, ascending.
    pub degrees: Vec<u32>,
    /// `e[h][k]`: fraction of ordered edge ends joining degrees `h` and `k`.
    pub e: Vec<Vec<f64>>,
    /// Marginal of `e`.
    pub q: Vec<f64>,
    pub std_q: f64,
}

impl DegreeMixingTable {
    pub fn from_projection(p: &ProjectedGraph) -> Option<Self> {
        if p.edges.is_empty() {
            return None;
        }
        let distinct: std::collections::BTreeSet<u32> = p
            .edges
            .iter()
            .flat_map(|&(v, w, _)| [p.degrees[v as usize], p.degrees[w as usize]])
            .collect();
        let degrees: Vec<u32> = distinct.into_iter().collect();
        let slot = |d: u32| degrees.binary_search(&d).expect("degree present");
        let k = degrees.len();
        let mut e = vec![vec![0.0; k]; k];
        let total = 2.0 * p.edges.len() as f64;
        for &(v, w, _) in &p.edges {
            let (a, b) = (slot(p.degrees[v as usize]), slot(p.degrees[w as usize]));
            e[a][b] += 1.0 / total;
            e[b][a] += 1.0 / total;
        }
        let q: Vec<f64> = e.iter().map(|row| row.iter().sum()).collect();
        let mean: f64 = degrees.iter().zip(&q).map(|(&d, &qd)| d as f64 * qd).sum();
        let var: f64 = degrees
            .iter()
            .zip(&q)
            .map(|(&d, &qd)| (d as f64 - mean).powi(2) * qd)
            .sum();
        Some(DegreeMixingTable {
            degrees,
            e,
            q,
            std_q: var.max(0.0).sqrt(),
        })
    }

    /// `sum_{h,k} d_h d_k (e_hk - q_h q_k) / std_q^2`, or `None` when the
    /// endpoint degrees have no spread.
    ///
    /// Evaluated in the centered form `sum (d_h - m)(d_k - m) e_hk`, which
    /// is equal because the rows of `e` sum to `q`, and avoids cancellation
    /// on nearly regular projections.
    pub fn assortativity(&self) -> Option<f64> {
        let var = self.std_q * self.std_q;
        let scale = self.degrees.last().copied().unwrap_or(0) as f64;
        if var <= 1e-12 * scale * scale {
            return None;
        }
        let mean: f64 = self.degrees.iter().zip(&self.q).map(|(&d, &q)| d as f64 * q).sum();
        let mut num = 0.0;
        for (h, &dh) in self.degrees.iter().enumerate() {
            for (k, &dk) in self.degrees.iter().enumerate() {
                num += (dh as f64 - mean) * (dk as f64 - mean) * self.e[h][k];
            }
        }
        Some(num / var)
    }
}

/// Degree assortativity of a projection: the Pearson correlation of the
/// degrees at either end of every edge, each edge counted in both
/// directions. `None` when undefined.
pub fn degree_assortativity(p: &ProjectedGraph) -> Option<f64> {
    if p.edges.is_empty() {
        return None;
    }
    let m = 2.0 * p.edges.len() as f64;
    let deg = |v: u32| p.degrees[v as usize] as f64;
    let mean = p.edges.iter().map(|&(v, w, _)| deg(v) + deg(w)).sum::<f64>() / m;
    let (mut cov, mut var) = (0.0, 0.0);
    for &(v, w, _) in &p.edges {
        let (a, b) = (deg(v) - mean, deg(w) - mean);
        cov += 2.0 * a * b;
        var += a * a + b * b;
    }
    if var <= 1e-12 * m * mean * mean {
        return None;
    }
    Some((cov / var).clamp(-1.0, 1.0))
}

/// Computes all eleven characteristics of a graph.
pub fn compute_vector(g: &BipartiteGraph, cfg: &CharacteristicsConfig) -> Result<CharacteristicVector> {
    let classical = classical_characteristics(g)?;
    let deg_u = average_degree(g, Partition::User);
    let deg_i = average_degree(g, Partition::Item);
    let clu_u = average_clustering_coefficient(g, Partition::User, cfg.empty_neighborhood);
    let clu_i = average_clustering_coefficient(g, Partition::Item, cfg.empty_neighborhood);
    let proj_u = project(g, Partition::User, cfg.projection_cap)?;
    let assort_user = degree_assortativity(&proj_u);
    drop(proj_u);
    let proj_i = project(g, Partition::Item, cfg.projection_cap)?;
    let assort_item = degree_assortativity(&proj_i);
    Ok(CharacteristicVector {
        space_size_log: classical.space_size_log,
        shape_log: classical.shape_log,
        density_log: classical.density_log,
        gini_user: classical.gini_user,
        gini_item: classical.gini_item,
        avg_degree_user_log: deg_u.log.unwrap_or(f64::NAN),
        avg_degree_item_log: deg_i.log.unwrap_or(f64::NAN),
        avg_clustc_user_log: clu_u.log,
        avg_clustc_item_log: clu_i.log,
        assort_user,
        assort_item,
        raw: RawCharacteristics {
            space_size: classical.space_size,
            shape: classical.shape,
            density: classical.density,
            avg_degree_user: deg_u.raw,
            avg_degree_item: deg_i.raw,
            avg_clustc_user: clu_u.raw,
            avg_clustc_item: clu_i.raw,
        },
    })
}

/// Symmetric correlation matrix over the characteristics, in `ALL` order.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<Characteristic>,
    pub values: Vec<Vec<f64>>,
    /// Vectors with an undefined characteristic, left out.
    pub skipped: usize,
}

impl CorrelationMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("characteristic");
        for c in &self.labels {
            out.push(',');
            out.push_str(c.label());
        }
        out.push('\n');
        for (c, row) in self.labels.iter().zip(&self.values) {
            out.push_str(c.label());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlation between every pair of characteristics across the
/// complete vectors.
pub fn pearson_matrix(vectors: &[CharacteristicVector]) -> Result<CorrelationMatrix> {
    let rows: Vec<[f64; 11]> = vectors
        .iter()
        .filter_map(|v| {
            let vals = v.values();
            vals.iter().all(Option::is_some).then(|| vals.map(|x| x.unwrap()))
        })
        .collect();
    let skipped = vectors.len() - rows.len();
    if rows.len() < 3 {
        return Err(Error::TooFewRows { have: rows.len(), need: 3 });
    }
    let n = rows.len() as f64;
    let mut means = [0.0; 11];
    for r in &rows {
        for (m, x) in means.iter_mut().zip(r) {
            *m += x / n;
        }
    }
    let mut cov = [[0.0; 11]; 11];
    for r in &rows {
        for a in 0..11 {
            let da = r[a] - means[a];
            for b in a..11 {
                cov[a][b] += da * (r[b] - means[b]);
            }
        }
    }
    for (a, c) in Characteristic::ALL.iter().enumerate() {
        let scale = means[a].abs().max(1.0);
        if cov[a][a] <= 1e-24 * n * scale * scale {
            return Err(Error::ZeroVariance(c.label().to_string()));
        }
    }
    let mut values = vec![vec![0.0; 11]; 11];
    for a in 0..11 {
        values[a][a] = 1.0;
        for b in a + 1..11 {
            let r = (cov[a][b] / (cov[a][a].sqrt() * cov[b][b].sqrt())).clamp(-1.0, 1.0);
            values[a][b] = r;
            values[b][a] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: Characteristic::ALL.to_vec(),
        values,
        skipped,
    })
}

/// Which nodes a degree histogram covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeScope {
    User,
    Item,
    All,
}

impl DegreeScope {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeScope::User => "user",
            DegreeScope::Item => "item",
            DegreeScope::All => "all",
        }
    }
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_sum_squares: f64,
}

fn fit_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_sum_squares = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    LineFit {
        slope,
        intercept,
        residual_sum_squares,
    }
}

/// Empirical degree distribution with power-law (`ln p` on `ln d`) and
/// exponential (`ln p` on `d`) fits over nonzero bins with `d >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistributionFit {
    pub histogram: Vec<(usize, f64)>,
    pub power_law: LineFit,
    pub exponential: LineFit,
}

impl DegreeDistributionFit {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("degree\tprobability\n");
        for &(d, p) in &self.histogram {
            out.push_str(&format!("{d}\t{p}\n"));
        }
        out
    }
}

/// Fits both laws to a `(degree, probability)` histogram.
pub fn fit_degree_histogram(histogram: Vec<(usize, f64)>) -> Result<DegreeDistributionFit> {
    let bins: Vec<(usize, f64)> = histogram
        .iter()
        .copied()
        .filter(|&(d, p)| d >= 1 && p > 0.0)
        .collect();
    if bins.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "degree distribution fit needs at least 3 distinct degrees, found {}",
            bins.len()
        )));
    }
    let power: Vec<(f64, f64)> = bins.iter().map(|&(d, p)| ((d as f64).ln(), p.ln())).collect();
    let expo: Vec<(f64, f64)> = bins.iter().map(|&(d, p)| (d as f64, p.ln())).collect();
    Ok(DegreeDistributionFit {
        histogram,
        power_law: fit_line(&power),
        exponential: fit_line(&expo),
    })
}

pub fn degree_histogram(g: &BipartiteGraph, scope: DegreeScope) -> Vec<(usize, f64)> {
    let degrees: Vec<usize> = match scope {
        DegreeScope::User => g.degrees(Partition::User),
        DegreeScope::Item => g.degrees(Partition::Item),
        DegreeScope::All => {
            let mut d = g.degrees(Partition::User);
            d.extend(g.degrees(Partition::Item));
            d
        }
    };
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for d in &degrees {
        *counts.entry(*d).or_default() += 1;
    }
    let n = degrees.len() as f64;
    counts.into_iter().map(|(d, c)| (d, c as f64 / n)).collect()
}

pub fn degree_distribution_fit(g: &BipartiteGraph, scope: DegreeScope) -> Result<DegreeDistributionFit> {
    fit_degree_histogram(degree_histogram(g, scope))
}

pub const CSV_HEADER: &str = "sample_id,SpaceSize_log,Shape_log,Density_log,Gini-U,Gini-I,AvgDegree-U_log,AvgDegree-I_log,AvgClustC-U_log,AvgClustC-I_log,Assort-U,Assort-I";

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => "NA".to_string(),
    }
}

pub(crate) fn parse_opt(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| format!("{s:?}: {e}"))
}

pub fn csv_row(sample_id: u64, v: &CharacteristicVector) -> String {
    let mut out = sample_id.to_string();
    for x in v.values() {
        out.push(',');
        out.push_str(&fmt_opt(x));
    }
    out
}

/// Parses one data row of the characteristics CSV.
pub fn parse_csv_row(line: &str) -> std::result::Result<(u64, CharacteristicVector), String> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() < 12 {
        return Err(format!("expected 12 fields, found {}", fields.len()));
    }
    let id = fields[0].trim().parse::<u64>().map_err(|e| e.to_string())?;
    let mut values = [None; 11];
    for (slot, f) in values.iter_mut().zip(&fields[1..12]) {
        *slot = parse_opt(f)?;
    }
    Ok((id, CharacteristicVector::from_values(values)))
}

pub fn characteristics_csv<'a>(rows: impl IntoIterator<Item = (u64, &'a CharacteristicVector)>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (id, v) in rows {
        out.push_str(&csv_row(id, v));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nu: usize, ni: usize, edges: &[(u32, u32)]) -> BipartiteGraph {
        BipartiteGraph::from_edges(nu, ni, edges.to_vec()).unwrap()
    }

    fn complete(nu: usize, ni: usize) -> BipartiteGraph {
        let edges: Vec<_> = (0..nu as u32).flat_map(|u| (0..ni as u32).map(move |i| (u, i))).collect();
        graph(nu, ni, &edges)
    }

    #[test]
    fn gini_of_small_sequence() {
        assert!((gini(&[1, 2, 3, 4]) - 0.25).abs() < 1e-15);
        assert_eq!(gini(&[3, 3, 3]), 0.0);
        assert_eq!(gini(&[]), 0.0);
    }

    #[test]
    fn gini_is_scale_invariant() {
        let d = [1, 5, 2, 9, 9, 4];
        let scaled: Vec<usize> = d.iter().map(|x| x * 7).collect();
        assert!((gini(&d) - gini(&scaled)).abs() < 1e-15);
    }

    #[test]
    fn shape_and_density_limits() {
        let c = classical_characteristics(&complete(3, 3)).unwrap();
        assert_eq!(c.shape_log, 0.0);
        assert_eq!(c.density_log, 0.0);
    }

    #[test]
    fn gowalla_scale_shape_and_space() {
        let (space, shape, _) = classical_from_counts(29_858, 40_981, 1_027_370);
        assert!((shape.log10() - (-0.1375)).abs() < 5e-5);
        assert!((space.log10() - 1.544).abs() < 5e-4);
    }

    #[test]
    fn average_degree_hand_counts() {
        let g = complete(2, 3);
        assert_eq!(average_degree(&g, Partition::User).raw, 3.0);
        assert_eq!(average_degree(&g, Partition::Item).raw, 2.0);
        let ten = complete(4, 10);
        assert_eq!(average_degree(&ten, Partition::User).log, Some(1.0));
    }

    #[test]
    fn clustering_identical_neighborhoods() {
        let r = average_clustering_coefficient(&complete(2, 2), Partition::User, EmptyNeighborhood::Zero);
        assert_eq!(r.raw, 1.0);
        assert_eq!(r.log, Some(0.0));
    }

    #[test]
    fn clustering_partial_overlap() {
        // u0 -> {i0, i1}, u1 -> {i1, i2}
        let g = graph(2, 3, &[(0, 0), (0, 1), (1, 1), (1, 2)]);
        let per = node_clustering(&g, Partition::User);
        assert!((per[0].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((per[1].unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn clustering_empty_neighborhood_policy() {
        // u0 and u1 share i0; u2 is alone on i1.
        let g = graph(3, 2, &[(0, 0), (1, 0), (2, 1)]);
        let zero = average_clustering_coefficient(&g, Partition::User, EmptyNeighborhood::Zero);
        let excl = average_clustering_coefficient(&g, Partition::User, EmptyNeighborhood::Exclude);
        assert!((zero.raw - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(excl.raw, 1.0);
        // no co-neighbors anywhere: undefined log
        let lonely = graph(2, 2, &[(0, 0), (1, 1)]);
        let r = average_clustering_coefficient(&lonely, Partition::User, EmptyNeighborhood::Zero);
        assert_eq!(r.log, None);
    }

    #[test]
    fn assortativity_of_path() {
        // a - b - c with degrees 1, 2, 1
        let p = ProjectedGraph {
            partition: Partition::User,
            n: 3,
            edges: vec![(0, 1, 1), (1, 2, 1)],
            degrees: vec![1, 2, 1],
        };
        assert!((degree_assortativity(&p).unwrap() + 1.0).abs() < 1e-12);
        let table = DegreeMixingTable::from_projection(&p).unwrap();
        assert!((table.assortativity().unwrap() + 1.0).abs() < 1e-12);
        let total: f64 = table.e.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assortativity_of_regular_projection_is_undefined() {
        let g = graph(3, 1, &[(0, 0), (1, 0), (2, 0)]);
        let p = project(&g, Partition::User, DEFAULT_PROJECTION_CAP).unwrap();
        assert_eq!(degree_assortativity(&p), None);
        assert_eq!(DegreeMixingTable::from_projection(&p).unwrap().assortativity(), None);
    }

    #[test]
    fn vector_fields_match_standalone_operations() {
        let g = graph(4, 4, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (3, 0), (3, 3), (2, 3)]);
        let v = compute_vector(&g, &CharacteristicsConfig::default()).unwrap();
        let c = classical_characteristics(&g).unwrap();
        assert_eq!(v.gini_item, c.gini_item);
        assert_eq!(v.density_log, c.density_log);
        assert_eq!(
            v.avg_clustc_item_log,
            average_clustering_coefficient(&g, Partition::Item, EmptyNeighborhood::Zero).log
        );
        let pu = project(&g, Partition::User, DEFAULT_PROJECTION_CAP).unwrap();
        assert_eq!(v.assort_user, degree_assortativity(&pu));
        assert_eq!(v.raw.avg_degree_user, 2.0);
    }

    #[test]
    fn pearson_unit_diagonal_and_affine_columns() {
        let vectors: Vec<CharacteristicVector> = (0..6)
            .map(|k| {
                let x = k as f64;
                let mut vals = [None; 11];
                for (c, slot) in vals.iter_mut().enumerate() {
                    *slot = Some(((x + 1.0) * (c as f64 + 1.3)).sin() + 0.1 * c as f64 * x);
                }
                vals[1] = Some(3.0 * vals[0].unwrap() - 2.0);
                vals[2] = Some(-0.5 * vals[0].unwrap());
                CharacteristicVector::from_values(vals)
            })
            .collect();
        let m = pearson_matrix(&vectors).unwrap();
        for a in 0..11 {
            assert_eq!(m.values[a][a], 1.0);
            for b in 0..11 {
                assert_eq!(m.values[a][b], m.values[b][a]);
            }
        }
        assert!((m.values[0][1] - 1.0).abs() < 1e-12);
        assert!((m.values[0][2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_names_constant_column() {
        let vectors: Vec<_> = (0..4)
            .map(|k| {
                let mut vals = [Some(k as f64 * 0.7 + 1.0); 11];
                for (c, slot) in vals.iter_mut().enumerate() {
                    *slot = Some((k as f64 + c as f64).powi(2));
                }
                vals[Characteristic::GiniItem.index()] = Some(0.5);
                CharacteristicVector::from_values(vals)
            })
            .collect();
        match pearson_matrix(&vectors) {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "Gini-I"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_power_law_histogram() {
        let hist: Vec<(usize, f64)> = (1..=20).map(|d| (d, 0.6 * (d as f64).powi(-2))).collect();
        let fit = fit_degree_histogram(hist).unwrap();
        assert!((fit.power_law.slope + 2.0).abs() < 1e-6);
        assert!(fit.power_law.residual_sum_squares < 1e-12);
    }

    #[test]
    fn exact_exponential_histogram() {
        let hist: Vec<(usize, f64)> = (1..=20).map(|d| (d, 0.4 * (-0.5 * d as f64).exp())).collect();
        let fit = fit_degree_histogram(hist).unwrap();
        assert!((fit.exponential.slope + 0.5).abs() < 1e-6);
        assert!(fit.exponential.residual_sum_squares < 1e-12);
    }

    #[test]
    fn degenerate_degree_support() {
        assert!(degree_distribution_fit(&complete(3, 3), DegreeScope::All).is_err());
    }

    #[test]
    fn histogram_sums_to_one() {
        let g = graph(3, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (2, 0), (2, 1)]);
        let hist = degree_histogram(&g, DegreeScope::All);
        let total: f64 = hist.iter().map(|h| h.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(degree_distribution_fit(&g, DegreeScope::All).is_ok());
    }

    #[test]
    fn csv_row_round_trip() {
        let g = graph(3, 3, &[(0, 0), (0, 1), (1, 1), (2, 2), (2, 0)]);
        let v = compute_vector(&g, &CharacteristicsConfig::default()).unwrap();
        let row = csv_row(7, &v);
        let (id, back) = parse_csv_row(&row).unwrap();
        assert_eq!(id, 7);
        assert_eq!(back.values(), v.values());
        assert_eq!(CSV_HEADER.split(',').count(), 12);
    }
}
