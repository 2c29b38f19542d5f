use crate::characteristics::{Characteristic, CharacteristicVector};
use crate::error::{Error, Result};

/// A sample left out of the design because some characteristic was
/// undefined or non-finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DroppedRow {
    pub sample_id: u64,
    pub columns: Vec<String>,
}

/// Predictor matrix, one row per sample, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    data: Vec<f64>,
    rows: usize,
    /// Column means and population standard deviations before any scaling.
    means: Vec<f64>,
    stds: Vec<f64>,
    sample_ids: Vec<u64>,
    standardized: bool,
    dropped: Vec<DroppedRow>,
}

impl DesignMatrix {
    /// Builds a matrix from complete rows. Fails on ragged or non-finite
    /// input and on columns without variance.
    pub fn from_rows(
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
        sample_ids: Vec<u64>,
        standardize: bool,
    ) -> Result<Self> {
        let c = names.len();
        let m = rows.len();
        if sample_ids.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{} sample ids for {m} rows",
                sample_ids.len()
            )));
        }
        let mut data = Vec::with_capacity(m * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} values, expected {c}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has a non-finite {}",
                    names[j]
                )));
            }
            data.extend_from_slice(row);
        }
        let mut means = vec![0.0; c];
        let mut stds = vec![0.0; c];
        for j in 0..c {
            let mean = (0..m).map(|i| data[i * c + j]).sum::<f64>() / m.max(1) as f64;
            let var = (0..m).map(|i| (data[i * c + j] - mean).powi(2)).sum::<f64>() / m.max(1) as f64;
            let std = var.sqrt();
            if m == 0 || std <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::ZeroVariance(names[j].clone()));
            }
            means[j] = mean;
            stds[j] = std;
        }
        if standardize {
            for i in 0..m {
                for j in 0..c {
                    let v = &mut data[i * c + j];
                    *v = (*v - means[j]) / stds[j];
                }
            }
        }
        Ok(DesignMatrix {
            names,
            data,
            rows: m,
            means,
            stds,
            sample_ids,
            standardized: standardize,
            dropped: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn sample_ids(&self) -> &[u64] {
        &self.sample_ids
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }

    pub fn dropped(&self) -> &[DroppedRow] {
        &self.dropped
    }
}

/// One regression observation: a sample's characteristics and its metric.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub sample_id: u64,
    pub vector: &'a CharacteristicVector,
    pub metric: f64,
}

/// Assembles the design over all eleven characteristics. Rows with an
/// undefined characteristic or a non-finite metric are dropped and logged.
pub fn build_design(observations: &[Observation<'_>], standardize: bool) -> Result<(DesignMatrix, Vec<f64>)> {
    let names: Vec<String> = Characteristic::ALL.iter().map(|c| c.label().to_string()).collect();
    let need = names.len() + 2;
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut dropped = Vec::new();
    for obs in observations {
        let values = obs.vector.values();
        let mut bad: Vec<String> = Characteristic::ALL
            .iter()
            .zip(values.iter())
            .filter(|(_, v)| !v.is_some_and(f64::is_finite))
            .map(|(c, _)| c.label().to_string())
            .collect();
        if !obs.metric.is_finite() {
            bad.push("metric".to_string());
        }
        if !bad.is_empty() {
            log::warn!(
                "sample {} left out of the regression: undefined {}",
                obs.sample_id,
                bad.join(", ")
            );
            dropped.push(DroppedRow {
                sample_id: obs.sample_id,
                columns: bad,
            });
            continue;
        }
        rows.push(values.iter().map(|v| v.unwrap()).collect());
        ids.push(obs.sample_id);
        y.push(obs.metric);
    }
    if rows.len() < need {
        return Err(Error::TooFewRows { have: rows.len(), need });
    }
    let mut design = DesignMatrix::from_rows(names, rows, ids, standardize)?;
    design.dropped = dropped;
    Ok((design, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(seed: u64, assort: Option<f64>) -> CharacteristicVector {
        let mut vals = [None; 11];
        for (j, v) in vals.iter_mut().enumerate() {
            let x = ((seed * 31 + j as u64 * 17) % 101) as f64 / 10.0 + j as f64;
            *v = Some(x.sin() + 0.01 * seed as f64);
        }
        vals[Characteristic::AssortUser.index()] = assort;
        CharacteristicVector::from_values(vals)
    }

    #[test]
    fn standardized_columns() {
        let vs: Vec<_> = (0..30).map(|s| vector(s, Some(s as f64 * 0.1))).collect();
        let obs: Vec<_> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| Observation { sample_id: i as u64, vector: v, metric: 0.1 })
            .collect();
        let (d, y) = build_design(&obs, true).unwrap();
        assert_eq!(y.len(), 30);
        for j in 0..d.cols() {
            let col = d.column(j);
            let mean = col.iter().sum::<f64>() / 30.0;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 30.0).sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((std - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn undefined_rows_are_dropped() {
        let vs: Vec<_> = (0..20)
            .map(|s| vector(s, if s % 4 == 0 { None } else { Some(s as f64) }))
            .collect();
        let obs: Vec<_> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| Observation { sample_id: i as u64, vector: v, metric: i as f64 })
            .collect();
        let (d, y) = build_design(&obs, false).unwrap();
        assert_eq!(d.dropped().len(), 5);
        assert_eq!(d.rows(), 15);
        assert_eq!(y.len(), 15);
        assert!(d.dropped().iter().all(|r| r.columns == vec!["Assort-U".to_string()]));
    }

    #[test]
    fn too_few_rows() {
        let vs: Vec<_> = (0..12).map(|s| vector(s, Some(s as f64))).collect();
        let obs: Vec<_> = vs
            .iter()
            .map(|v| Observation { sample_id: 0, vector: v, metric: 0.0 })
            .collect();
        assert!(matches!(build_design(&obs, true), Err(Error::TooFewRows { have: 12, need: 13 })));
    }

    #[test]
    fn zero_variance_names_column() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 3.0], vec![1.0, 5.0]];
        let err = DesignMatrix::from_rows(vec!["a".into(), "b".into()], rows, vec![0, 1, 2], true).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(ref n) if n == "a"));
    }
}
