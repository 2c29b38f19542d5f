use std::fmt::Write as _;

use super::stats::significance_stars;
use crate::error::{Error, Result};

/// One fitted coefficient. Aliased columns carry NaN in every field.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_err: f64,
    pub t: f64,
    pub p: f64,
}

impl CoefficientRow {
    pub fn aliased(name: &str) -> Self {
        CoefficientRow {
            name: name.to_string(),
            estimate: f64::NAN,
            std_err: f64::NAN,
            t: f64::NAN,
            p: f64::NAN,
        }
    }

    pub fn is_aliased(&self) -> bool {
        self.estimate.is_nan()
    }

    pub fn stars(&self) -> &'static str {
        significance_stars(self.p)
    }
}

/// Result of an explanatory fit.
#[derive(Clone, Debug)]
pub struct RegressionReport {
    pub intercept: CoefficientRow,
    /// One row per design column, in design order.
    pub coefficients: Vec<CoefficientRow>,
    pub aliased: Vec<String>,
    pub r2: f64,
    pub adj_r2: f64,
    pub m: usize,
    /// Number of estimated (non-aliased) predictors.
    pub c: usize,
    pub standardized: bool,
    pub sample_ids: Vec<u64>,
    pub y: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

// Bitwise equality, with every NaN equal to every other.
fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn same_row(a: &CoefficientRow, b: &CoefficientRow) -> bool {
    a.name == b.name
        && same(a.estimate, b.estimate)
        && same(a.std_err, b.std_err)
        && same(a.t, b.t)
        && same(a.p, b.p)
}

impl PartialEq for RegressionReport {
    fn eq(&self, o: &Self) -> bool {
        let vec_eq = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(*x, *y));
        same_row(&self.intercept, &o.intercept)
            && self.coefficients.len() == o.coefficients.len()
            && self.coefficients.iter().zip(&o.coefficients).all(|(a, b)| same_row(a, b))
            && self.aliased == o.aliased
            && same(self.r2, o.r2)
            && same(self.adj_r2, o.adj_r2)
            && self.m == o.m
            && self.c == o.c
            && self.standardized == o.standardized
            && self.sample_ids == o.sample_ids
            && vec_eq(&self.y, &o.y)
            && vec_eq(&self.fitted, &o.fitted)
            && vec_eq(&self.residuals, &o.residuals)
    }
}

pub const COEFFICIENT_HEADER: &str = "characteristic,coefficient,std_err,t,p,stars";
pub const FIT_HEADER: &str = "sample_id,y,fitted,residual";

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad {what} value {s:?}")))
}

impl RegressionReport {
    pub fn theta0(&self) -> f64 {
        self.intercept.estimate
    }

    pub fn coefficient(&self, name: &str) -> Option<&CoefficientRow> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Summary rows, then one line per coefficient starting with the constant.
    /// Floats are written in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "R2,{}", self.r2).unwrap();
        writeln!(s, "adj_R2,{}", self.adj_r2).unwrap();
        writeln!(s, "M,{}", self.m).unwrap();
        writeln!(s, "C,{}", self.c).unwrap();
        writeln!(s, "standardized,{}", self.standardized).unwrap();
        writeln!(s, "aliased,{}", self.aliased.join(";")).unwrap();
        writeln!(s, "{COEFFICIENT_HEADER}").unwrap();
        for row in std::iter::once(&self.intercept).chain(&self.coefficients) {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                row.name,
                row.estimate,
                row.std_err,
                row.t,
                row.p,
                row.stars()
            )
            .unwrap();
        }
        s
    }

    pub fn fit_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{FIT_HEADER}").unwrap();
        for i in 0..self.m {
            writeln!(
                s,
                "{},{},{},{}",
                self.sample_ids[i], self.y[i], self.fitted[i], self.residuals[i]
            )
            .unwrap();
        }
        s
    }

    /// Inverse of [`to_csv`](Self::to_csv) plus [`fit_csv`](Self::fit_csv).
    pub fn from_csv(report: &str, fit: &str) -> Result<Self> {
        let mut lines = report.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidArgument(format!("missing {key} row")))?;
            match line.split_once(',') {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(Error::InvalidArgument(format!("expected {key} row, got {line:?}"))),
            }
        };
        let r2 = parse_f64(&header("R2")?, "R2")?;
        let adj_r2 = parse_f64(&header("adj_R2")?, "adj_R2")?;
        let m: usize = header("M")?
            .parse()
            .map_err(|_| Error::InvalidArgument("bad M".into()))?;
        let c: usize = header("C")?
            .parse()
            .map_err(|_| Error::InvalidArgument("bad C".into()))?;
        let standardized = match header("standardized")?.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::InvalidArgument(format!("bad standardized flag {other:?}"))),
        };
        let aliased_field = header("aliased")?;
        let aliased: Vec<String> = if aliased_field.is_empty() {
            Vec::new()
        } else {
            aliased_field.split(';').map(str::to_string).collect()
        };
        if lines.next() != Some(COEFFICIENT_HEADER) {
            return Err(Error::InvalidArgument("missing coefficient header".into()));
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::InvalidArgument(format!("bad coefficient row {line:?}")));
            }
            rows.push(CoefficientRow {
                name: f[0].to_string(),
                estimate: parse_f64(f[1], "coefficient")?,
                std_err: parse_f64(f[2], "std_err")?,
                t: parse_f64(f[3], "t")?,
                p: parse_f64(f[4], "p")?,
            });
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no coefficient rows".into()));
        }
        let intercept = rows.remove(0);

        let mut fit_lines = fit.lines();
        if fit_lines.next() != Some(FIT_HEADER) {
            return Err(Error::InvalidArgument("missing fit header".into()));
        }
        let (mut sample_ids, mut y, mut fitted, mut residuals) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for line in fit_lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::InvalidArgument(format!("bad fit row {line:?}")));
            }
            sample_ids.push(
                f[0].parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad sample id {:?}", f[0])))?,
            );
            y.push(parse_f64(f[1], "y")?);
            fitted.push(parse_f64(f[2], "fitted")?);
            residuals.push(parse_f64(f[3], "residual")?);
        }
        if sample_ids.len() != m {
            return Err(Error::InvalidArgument(format!(
                "fit has {} rows, report says M = {m}",
                sample_ids.len()
            )));
        }
        Ok(RegressionReport {
            intercept,
            coefficients: rows,
            aliased,
            r2,
            adj_r2,
            m,
            c,
            standardized,
            sample_ids,
            y,
            fitted,
            residuals,
        })
    }
}

fn cell(row: &CoefficientRow) -> String {
    if row.is_aliased() {
        "NA".to_string()
    } else {
        format!("{:.3}{}", row.estimate, row.stars())
    }
}

/// Side-by-side markdown table with one column per labelled report: the
/// R² (adjusted R²) row, the constant, then each characteristic.
pub fn markdown_table(columns: &[(String, &RegressionReport)]) -> String {
    let mut s = String::new();
    s.push_str("| |");
    for (label, _) in columns {
        write!(s, " {label} |").unwrap();
    }
    s.push_str("\n|---|");
    for _ in columns {
        s.push_str("---|");
    }
    s.push_str("\n| R² (adj. R²) |");
    for (_, r) in columns {
        write!(s, " {:.3} ({:.3}) |", r.r2, r.adj_r2).unwrap();
    }
    s.push_str("\n| Constant |");
    for (_, r) in columns {
        write!(s, " {} |", cell(&r.intercept)).unwrap();
    }
    s.push('\n');
    let names: Vec<&str> = columns
        .first()
        .map(|(_, r)| r.coefficients.iter().map(|c| c.name.as_str()).collect())
        .unwrap_or_default();
    for name in names {
        write!(s, "| {name} |").unwrap();
        for (_, r) in columns {
            let text = r.coefficient(name).map(cell).unwrap_or_else(|| "NA".into());
            write!(s, " {text} |").unwrap();
        }
        s.push('\n');
    }
    s.push_str("\n*** p ≤ 0.001, ** p ≤ 0.01, * p ≤ 0.05\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RegressionReport {
        RegressionReport {
            intercept: CoefficientRow {
                name: "Constant".into(),
                estimate: 0.1,
                std_err: 0.001,
                t: 100.0,
                p: 0.0,
            },
            coefficients: vec![
                CoefficientRow {
                    name: "Gini-U".into(),
                    estimate: -0.012_345_678_901_234_5,
                    std_err: 0.004,
                    t: -3.086,
                    p: 0.002_1,
                },
                CoefficientRow::aliased("AvgDegree-U_log"),
            ],
            aliased: vec!["AvgDegree-U_log".into()],
            r2: 0.9712,
            adj_r2: 0.970_66,
            m: 3,
            c: 1,
            standardized: true,
            sample_ids: vec![4, 7, 9],
            y: vec![0.1, 0.2, 0.3],
            fitted: vec![0.11, 0.19, 0.3],
            residuals: vec![-0.01, 0.01, 0.0],
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let back = RegressionReport::from_csv(&r.to_csv(), &r.fit_csv()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn markdown_layout() {
        let r = sample();
        let md = markdown_table(&[("LightGCN".into(), &r)]);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[2], "| R² (adj. R²) | 0.971 (0.971) |");
        assert_eq!(lines[3], "| Constant | 0.100*** |");
        assert_eq!(lines[4], "| Gini-U | -0.012** |");
        assert_eq!(lines[5], "| AvgDegree-U_log | NA |");
    }
}
