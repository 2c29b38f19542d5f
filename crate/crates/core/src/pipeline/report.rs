use std::fmt::Write as _;

use super::config::Target;
use crate::error::{Error, Result};
use crate::explain::{markdown_table, CoefficientRow, RegressionReport};

pub const ALPHA_STATS_HEADER: &str = "alpha,node_samples,edge_samples,mean_users,mean_items,mean_interactions";

/// One mixing rate of the sweep: the selected pool and its regressions.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub node_samples: usize,
    pub edge_samples: usize,
    pub mean_users: f64,
    pub mean_items: f64,
    pub mean_interactions: f64,
    pub reports: Vec<(Target, RegressionReport)>,
}

impl AlphaSummary {
    pub fn stats_csv(&self) -> String {
        format!(
            "{ALPHA_STATS_HEADER}\n{},{},{},{},{},{}\n",
            self.alpha, self.node_samples, self.edge_samples, self.mean_users, self.mean_items, self.mean_interactions
        )
    }

    /// Reads the statistics written by [`AlphaSummary::stats_csv`]; reports
    /// start empty.
    pub fn parse_stats(text: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad sampling statistics {text:?}"));
        let mut lines = text.lines();
        if lines.next() != Some(ALPHA_STATS_HEADER) {
            return Err(bad());
        }
        let f: Vec<&str> = lines.next().ok_or_else(bad)?.split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad());
        Ok(AlphaSummary {
            alpha: float(f[0])?,
            node_samples: count(f[1])?,
            edge_samples: count(f[2])?,
            mean_users: float(f[3])?,
            mean_items: float(f[4])?,
            mean_interactions: float(f[5])?,
            reports: Vec::new(),
        })
    }
}

fn cell(row: &CoefficientRow) -> String {
    if row.is_aliased() {
        "NA".into()
    } else {
        format!("{:.3}{}", row.estimate, row.stars())
    }
}

/// The side-by-side table as CSV: R² (adjusted R²) first, then the constant
/// and one row per characteristic.
pub fn summary_csv(columns: &[(String, &RegressionReport)]) -> String {
    let mut s = String::from("row");
    for (label, _) in columns {
        write!(s, ",{label}").unwrap();
    }
    s.push_str("\nR2 (adj R2)");
    for (_, r) in columns {
        write!(s, ",{:.3} ({:.3})", r.r2, r.adj_r2).unwrap();
    }
    s.push_str("\nConstant");
    for (_, r) in columns {
        write!(s, ",{}", cell(&r.intercept)).unwrap();
    }
    s.push('\n');
    let names: Vec<&str> = columns
        .first()
        .map(|(_, r)| r.coefficients.iter().map(|c| c.name.as_str()).collect())
        .unwrap_or_default();
    for name in names {
        s.push_str(name);
        for (_, r) in columns {
            let text = r.coefficient(name).map(cell).unwrap_or_else(|| "NA".into());
            write!(s, ",{text}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn labelled<'a>(reports: impl IntoIterator<Item = &'a (Target, RegressionReport)>) -> Vec<(String, &'a RegressionReport)> {
    reports.into_iter().map(|(t, r)| (t.name().to_string(), r)).collect()
}

/// Markdown report. Sections without a completed regression are left out.
pub fn render_markdown(metric: &str, main: &[(Target, RegressionReport)], sweep: &[AlphaSummary]) -> String {
    let mut s = String::new();
    if !main.is_empty() {
        writeln!(s, "# Explanatory model of {metric}\n").unwrap();
        for (t, r) in main {
            write!(s, "- {t}: M = {}, C = {}", r.m, r.c).unwrap();
            if !r.aliased.is_empty() {
                write!(s, ", aliased: {}", r.aliased.join(", ")).unwrap();
            }
            s.push('\n');
        }
        s.push('\n');
        s.push_str(&markdown_table(&labelled(main)));
    }
    let sweep: Vec<&AlphaSummary> = sweep.iter().filter(|a| !a.reports.is_empty()).collect();
    if !sweep.is_empty() {
        if !s.is_empty() {
            s.push('\n');
        }
        writeln!(s, "# Mixing sweep of {metric}").unwrap();
        for a in sweep {
            writeln!(
                s,
                "\n## alpha = {} ({} node-dropout, {} edge-dropout samples)\n",
                a.alpha, a.node_samples, a.edge_samples
            )
            .unwrap();
            writeln!(
                s,
                "Average sampling statistics: {:.1} users, {:.1} items, {:.1} interactions\n",
                a.mean_users, a.mean_items, a.mean_interactions
            )
            .unwrap();
            s.push_str(&markdown_table(&labelled(&a.reports)));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_round_trip() {
        let a = AlphaSummary {
            alpha: 0.3,
            node_samples: 28,
            edge_samples: 12,
            mean_users: 512.25,
            mean_items: 498.0,
            mean_interactions: 3021.5,
            reports: Vec::new(),
        };
        assert_eq!(AlphaSummary::parse_stats(&a.stats_csv()).unwrap(), a);
    }

    #[test]
    fn empty_sections_are_omitted() {
        assert_eq!(render_markdown("Recall@20", &[], &[]), "");
    }
}
