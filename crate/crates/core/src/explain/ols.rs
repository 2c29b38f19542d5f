use super::design::DesignMatrix;
use super::report::{CoefficientRow, RegressionReport};
use super::stats::student_t_two_sided;
use crate::error::{Error, Result};

/// Relative residual norm below which a column counts as a linear
/// combination of the columns before it.
const ALIAS_TOLERANCE: f64 = 1e-8;

/// What to do with columns that are linear combinations of earlier ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RankPolicy {
    /// Fail, naming the collinear columns.
    #[default]
    Error,
    /// Leave them out of the fit and report them as aliased.
    DropAliased,
}

/// Householder QR of the kept columns, built column by column in input order.
struct SequentialQr {
    m: usize,
    /// Householder vectors, one per kept column.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, column-major over kept columns.
    r: Vec<Vec<f64>>,
}

impl SequentialQr {
    fn new(m: usize) -> Self {
        SequentialQr {
            m,
            reflectors: Vec::new(),
            r: Vec::new(),
        }
    }

    fn rank(&self) -> usize {
        self.reflectors.len()
    }

    fn apply_reflectors(&self, x: &mut [f64]) {
        for (k, v) in self.reflectors.iter().enumerate() {
            let dot: f64 = v.iter().zip(&x[k..]).map(|(a, b)| a * b).sum();
            for (xi, vi) in x[k..].iter_mut().zip(v) {
                *xi -= 2.0 * dot * vi;
            }
        }
    }

    /// Adds a column if it is not (numerically) in the span of the kept
    /// ones. Returns whether it was kept.
    fn push(&mut self, column: &[f64]) -> bool {
        let original: f64 = column.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut x = column.to_vec();
        self.apply_reflectors(&mut x);
        let k = self.rank();
        let tail: f64 = x[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if k >= self.m || original == 0.0 || tail <= ALIAS_TOLERANCE * original {
            return false;
        }
        let alpha = if x[k] > 0.0 { -tail } else { tail };
        let mut v: Vec<f64> = x[k..].to_vec();
        v[0] -= alpha;
        let vnorm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut v {
            *a /= vnorm;
        }
        let mut rcol = x[..k].to_vec();
        rcol.push(alpha);
        self.reflectors.push(v);
        self.r.push(rcol);
        true
    }

    /// `Q^T y`, first `rank` entries.
    fn qty(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        self.apply_reflectors(&mut z);
        z.truncate(self.rank());
        z
    }

    /// Solves `R b = z`.
    fn back_substitute(&self, z: &[f64]) -> Vec<f64> {
        let n = self.rank();
        let mut b = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.r[j][i] * b[j];
            }
            b[i] = s / self.r[i][i];
        }
        b
    }

    /// Diagonal of `(R^T R)^-1 = R^-1 R^-T`.
    fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let n = self.rank();
        // Rinv is upper triangular; solve R * col_j = e_j.
        let mut rinv = vec![vec![0.0; n]; n]; // rinv[j][i]: column j, row i
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rinv[j] = self.back_substitute(&e);
        }
        (0..n)
            .map(|i| (i..n).map(|j| rinv[j][i] * rinv[j][i]).sum())
            .collect()
    }
}

/// Ordinary least squares with an intercept, requiring full column rank.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<RegressionReport> {
    fit_ols_with(x, y, RankPolicy::Error)
}

/// Ordinary least squares with an intercept. Coefficients come from a
/// Householder QR factorization; standard errors from `s^2 (X^T X)^-1` with
/// `s^2 = SS_res / (M - rank)`; p-values are two-sided Student-t.
pub fn fit_ols_with(x: &DesignMatrix, y: &[f64], policy: RankPolicy) -> Result<RegressionReport> {
    let m = x.rows();
    if y.len() != m {
        return Err(Error::InvalidArgument(format!(
            "target has {} values for {m} design rows",
            y.len()
        )));
    }
    let mut qr = SequentialQr::new(m);
    let intercept = vec![1.0; m];
    if !qr.push(&intercept) {
        return Err(Error::TooFewRows { have: m, need: 1 });
    }
    let mut kept = Vec::new();
    let mut aliased = Vec::new();
    for j in 0..x.cols() {
        let col = x.column(j);
        if qr.push(&col) {
            kept.push(j);
        } else {
            aliased.push(j);
        }
    }
    if !aliased.is_empty() && policy == RankPolicy::Error {
        return Err(Error::RankDeficient(
            aliased.iter().map(|&j| x.names()[j].clone()).collect(),
        ));
    }
    let rank = qr.rank();
    if m <= rank {
        return Err(Error::TooFewRows { have: m, need: rank + 1 });
    }

    let beta = qr.back_substitute(&qr.qty(y));
    let mut fitted = vec![beta[0]; m];
    for (slot, &j) in kept.iter().enumerate() {
        let b = beta[slot + 1];
        for (f, xv) in fitted.iter_mut().zip(x.column(j)) {
            *f += b * xv;
        }
    }
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = y.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let predictors = rank - 1;
    let df = (m - rank) as f64;
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
    let adj_r2 = adjusted_r2(r2, m, predictors);
    let sigma2 = ss_res / df;
    let gram = qr.inverse_gram_diagonal();

    let row = |name: &str, estimate: f64, g: f64| {
        let std_err = (sigma2 * g).sqrt();
        let t = if std_err == 0.0 {
            if estimate == 0.0 {
                0.0
            } else {
                estimate.signum() * f64::INFINITY
            }
        } else {
            estimate / std_err
        };
        CoefficientRow {
            name: name.to_string(),
            estimate,
            std_err,
            t,
            p: student_t_two_sided(t, df),
        }
    };
    let intercept_row = row("Constant", beta[0], gram[0]);
    let mut coefficients: Vec<CoefficientRow> = x
        .names()
        .iter()
        .map(|n| CoefficientRow::aliased(n))
        .collect();
    for (slot, &j) in kept.iter().enumerate() {
        coefficients[j] = row(&x.names()[j], beta[slot + 1], gram[slot + 1]);
    }
    Ok(RegressionReport {
        intercept: intercept_row,
        coefficients,
        aliased: aliased.iter().map(|&j| x.names()[j].clone()).collect(),
        r2,
        adj_r2,
        m,
        c: predictors,
        standardized: x.standardized(),
        sample_ids: x.sample_ids().to_vec(),
        y: y.to_vec(),
        fitted,
        residuals,
    })
}

/// `1 - (1 - R^2)(M - 1) / (M - C - 1)`.
pub fn adjusted_r2(r2: f64, m: usize, c: usize) -> f64 {
    if m <= c + 1 {
        return f64::NAN;
    }
    1.0 - (1.0 - r2) * (m as f64 - 1.0) / (m as f64 - c as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<Vec<f64>>, standardize: bool) -> DesignMatrix {
        let names = (0..cols.len()).map(|j| format!("x{j}")).collect();
        let m = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        DesignMatrix::from_rows(names, rows, (0..m as u64).collect(), standardize).unwrap()
    }

    #[test]
    fn planted_noiseless_model() {
        let x1: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let x2: Vec<f64> = (0..20).map(|i| (i as f64 * 0.11).cos() + 0.05 * i as f64).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 1.0 + 2.0 * a - 3.0 * b).collect();
        let r = fit_ols(&design(vec![x1, x2], false), &y).unwrap();
        assert!((r.intercept.estimate - 1.0).abs() < 1e-8);
        assert!((r.coefficients[0].estimate - 2.0).abs() < 1e-8);
        assert!((r.coefficients[1].estimate + 3.0).abs() < 1e-8);
        assert!((r.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjusted_r2_arithmetic() {
        let adj = adjusted_r2(0.971, 600, 11);
        assert!((adj - 0.970_457_482_993_197_3).abs() < 1e-12);
        // a displayed R^2 of 0.971 covers [0.9705, 0.9715); the upper part of
        // that interval also displays an adjusted value of 0.971
        assert_eq!(format!("{:.3}", adjusted_r2(0.9712, 600, 11)), "0.971");
    }

    #[test]
    fn collinear_columns_are_reported() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..10).map(|i| ((i * i) % 7) as f64).collect();
        let x3: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - b + 4.0).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64).sqrt()).collect();
        let d = design(vec![x1, x2, x3], false);
        match fit_ols(&d, &y) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["x2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
        let r = fit_ols_with(&d, &y, RankPolicy::DropAliased).unwrap();
        assert_eq!(r.aliased, vec!["x2".to_string()]);
        assert!(r.coefficients[2].estimate.is_nan());
        assert_eq!(r.c, 2);
    }

    #[test]
    fn constant_target_with_standardized_predictors() {
        let x1: Vec<f64> = (0..12).map(|i| (i as f64 * 0.9).sin()).collect();
        let x2: Vec<f64> = (0..12).map(|i| (i as f64).ln_1p()).collect();
        let y = vec![0.42; 12];
        let r = fit_ols(&design(vec![x1, x2], true), &y).unwrap();
        assert!((r.intercept.estimate - 0.42).abs() < 1e-12);
        for c in &r.coefficients {
            assert!(c.estimate.abs() < 1e-12);
        }
    }
}
