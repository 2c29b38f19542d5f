//! Top-K accuracy metrics with binary relevance.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::recommenders::{Split, TrainedModel};

/// Fraction of `test` found among the first `k` entries of `ranked`.
/// `test` must be sorted.
pub fn recall_at_k(ranked: &[u32], test: &[u32], k: usize) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| test.binary_search(i).is_ok())
        .count();
    hits as f64 / test.len() as f64
}

/// Normalized discounted cumulative gain with the ideal ordering truncated
/// at `min(k, |test|)`. `test` must be sorted.
pub fn ndcg_at_k(ranked: &[u32], test: &[u32], k: usize) -> f64 {
    if test.is_empty() || k == 0 {
        return 0.0;
    }
    let gain = |p: usize| 1.0 / ((p + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| test.binary_search(i).is_ok())
        .map(|(p, _)| gain(p))
        .sum();
    let idcg: f64 = (0..k.min(test.len())).map(gain).sum();
    dcg / idcg
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserMetrics {
    pub user: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationResult {
    pub k: usize,
    pub per_user: Vec<UserMetrics>,
    pub recall: f64,
    pub ndcg: f64,
}

impl EvaluationResult {
    pub fn evaluated_users(&self) -> usize {
        self.per_user.len()
    }

    /// `user_id<TAB>recall@K<TAB>ndcg@K` with the graph's user tokens.
    pub fn per_user_tsv(&self, split: &Split) -> String {
        let mut s = format!("user_id\trecall@{k}\tndcg@{k}\n", k = self.k);
        for m in &self.per_user {
            writeln!(s, "{}\t{}\t{}", split.train.user_id(m.user), m.recall, m.ndcg).unwrap();
        }
        s
    }
}

/// Test-set metrics: every user with held-out test items is ranked over the
/// catalog minus their train and validation items.
pub fn evaluate(model: &TrainedModel, split: &Split, k: usize) -> Result<EvaluationResult> {
    let users: Vec<usize> = split.evaluated_users().collect();
    if users.is_empty() {
        return Err(Error::NoEvaluatedUsers);
    }
    let per_user: Vec<UserMetrics> = users
        .par_iter()
        .map(|&u| {
            let ranked = model.rank_items(u, &split.test_exclusions(u), k);
            let test = &split.test_by_user[u];
            UserMetrics {
                user: u,
                recall: recall_at_k(&ranked, test, k),
                ndcg: ndcg_at_k(&ranked, test, k),
            }
        })
        .collect();
    let n = per_user.len() as f64;
    let recall = per_user.iter().map(|m| m.recall).sum::<f64>() / n;
    let ndcg = per_user.iter().map(|m| m.ndcg).sum::<f64>() / n;
    Ok(EvaluationResult {
        k,
        per_user,
        recall,
        ndcg,
    })
}

/// Expected Recall@K of a uniformly random ranking under the test protocol:
/// each evaluated user ranks `c` candidates, so a test item lands in the
/// top `k` with probability `min(k, c) / c`.
pub fn random_recall_baseline(split: &Split, k: usize) -> f64 {
    let users: Vec<usize> = split.evaluated_users().collect();
    let total: f64 = users
        .iter()
        .map(|&u| {
            let c = split.num_items() - split.test_exclusions(u).len();
            k.min(c) as f64 / c as f64
        })
        .sum();
    total / users.len() as f64
}
