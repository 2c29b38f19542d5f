use std::cmp::Ordering;
use std::fmt::Write as _;

use super::config::ModelKind;
use crate::error::{Error, Result};

/// Dense row-major matrix of node embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Embeddings {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Embeddings {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_data(rows: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * dim);
        Embeddings { rows, dim, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// One line per row, comma-separated, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.data.len() * 12);
        for r in 0..self.rows {
            for (k, v) in self.row(r).iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut rows = 0;
        let mut dim = None;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("bad embedding row {}", n + 1)))?;
            match dim {
                None => dim = Some(vals.len()),
                Some(d) if d != vals.len() => {
                    return Err(Error::InvalidArgument(format!("ragged embedding row {}", n + 1)))
                }
                _ => {}
            }
            data.extend(vals);
            rows += 1;
        }
        Ok(Embeddings {
            rows,
            dim: dim.unwrap_or(0),
            data,
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Model-specific state kept alongside the final embeddings.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelExtras {
    None,
    Dgcf {
        /// Final-layer intent weights, `[intent][train edge]` in the train
        /// graph's edge order.
        intent_weights: Vec<Vec<f64>>,
    },
    UltraGcn {
        /// Items whose co-occurrence weights were undefined and skipped.
        skipped_items: usize,
    },
    SvdGcn {
        left: Embeddings,
        right: Embeddings,
        singular_values: Vec<f64>,
        transform: Embeddings,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub user_embeddings: Embeddings,
    pub item_embeddings: Embeddings,
    pub extras: ModelExtras,
    pub epochs_trained: usize,
    pub stopped_early: bool,
    /// Best validation Recall@20 seen (NaN when there was no validation set).
    pub best_valid_recall: f64,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl TrainedModel {
    pub fn score(&self, u: usize, i: usize) -> f64 {
        dot(self.user_embeddings.row(u), self.item_embeddings.row(i))
    }

    pub fn scores(&self, u: usize) -> Vec<f64> {
        let eu = self.user_embeddings.row(u);
        (0..self.item_embeddings.rows)
            .map(|i| dot(eu, self.item_embeddings.row(i)))
            .collect()
    }

    pub fn rank_items(&self, u: usize, exclude: &[u32], k: usize) -> Vec<u32> {
        top_k(&self.scores(u), exclude, k)
    }
}

fn by_score(scores: &[f64]) -> impl Fn(&u32, &u32) -> Ordering + '_ {
    move |&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Indices of the `k` highest scores, skipping `exclude` (sorted), with ties
/// going to the lower index.
pub fn top_k(scores: &[f64], exclude: &[u32], k: usize) -> Vec<u32> {
    let mut cand: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| exclude.binary_search(i).is_err())
        .collect();
    let cmp = by_score(scores);
    if k < cand.len() {
        if k == 0 {
            return Vec::new();
        }
        cand.select_nth_unstable_by(k - 1, &cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(&cmp);
    cand
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lower_index() {
        let scores = [0.5, 0.9, 0.5, 0.9, 0.1];
        assert_eq!(top_k(&scores, &[], 3), vec![1, 3, 0]);
        assert_eq!(top_k(&scores, &[1], 2), vec![3, 0]);
        assert_eq!(top_k(&scores, &[], 10), vec![1, 3, 0, 2, 4]);
        assert!(top_k(&scores, &[], 0).is_empty());
    }

    #[test]
    fn embedding_csv_round_trip() {
        let e = Embeddings::from_data(2, 3, vec![0.1, -2.0, 3.5e-9, 1.0, 0.0, -0.25]);
        assert_eq!(Embeddings::from_csv(&e.to_csv()).unwrap(), e);
    }
}
