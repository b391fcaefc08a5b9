//! Run metrics: AUC of the running top-k mean, internal diversity, novelty
//! and min-max normalisation.

use fragrag_chem::{tanimoto, Fingerprint};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Novelty threshold: a molecule is novel when its nearest training
/// neighbour is strictly less similar than this.
pub const NOVELTY_THRESHOLD: f64 = 0.4;

/// `(1/budget) Σ_t mean(top-k of y_1..y_t)`, holding the final value from the
/// end of the history up to `budget`.
pub fn auc_topk(ys: &[f64], k: usize, budget: usize) -> Result<f64> {
    if ys.is_empty() {
        return Err(CoreError::EmptyHistory);
    }
    if k == 0 {
        return Err(CoreError::Config("k must be positive".into()));
    }
    let budget = budget.max(ys.len());
    // ascending top-k buffer
    let mut top: Vec<f64> = Vec::with_capacity(k + 1);
    let mut sum = 0.0;
    let mut last = 0.0;
    for &y in ys {
        let pos = top.partition_point(|&v| v < y);
        if top.len() < k {
            top.insert(pos, y);
        } else if pos > 0 {
            top.insert(pos, y);
            top.remove(0);
        }
        last = top.iter().rev().sum::<f64>() / top.len() as f64;
        sum += last;
    }
    for _ in ys.len()..budget {
        sum += last;
    }
    Ok(sum / budget as f64)
}

/// One minus the mean pairwise Tanimoto similarity.
pub fn diversity(fps: &[Fingerprint]) -> Result<f64> {
    let n = fps.len();
    if n < 2 {
        return Err(CoreError::TooFewMolecules { needed: 2, got: n });
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += tanimoto(&fps[i], &fps[j]);
        }
    }
    Ok(1.0 - (2.0 / (n * (n - 1)) as f64) * s)
}

/// Fraction of `gen` whose maximum similarity to `train` is below the
/// novelty threshold.
pub fn novelty(gen: &[Fingerprint], train: &[Fingerprint]) -> Result<f64> {
    if train.is_empty() {
        return Err(CoreError::Config("novelty needs a training set".into()));
    }
    if gen.is_empty() {
        return Ok(0.0);
    }
    let novel = gen
        .iter()
        .filter(|g| {
            train
                .iter()
                .map(|t| tanimoto(g, t))
                .fold(0.0, f64::max)
                < NOVELTY_THRESHOLD
        })
        .count();
    Ok(novel as f64 / gen.len() as f64)
}

/// `(v - min) / (max - min)`; a constant input maps to 0.5 everywhere.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Indices of the `n` best entries by descending `y`, ties by key.
pub fn top_n_indices(ys: &[f64], keys: &[String], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ys.len()).collect();
    idx.sort_by(|&a, &b| ys[b].total_cmp(&ys[a]).then_with(|| keys[a].cmp(&keys[b])));
    idx.truncate(n);
    idx
}

/// The per-run summary written to `metrics.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub auc_top10: f64,
    pub auc_top100: f64,
    pub diversity_top100: f64,
    pub novelty_top100: f64,
}

pub const METRICS_HEADER: &str = "run_id,auc_top10,auc_top100,diversity_top100,novelty_top100";

impl RunMetrics {
    pub fn csv_row(&self, run_id: &str) -> String {
        format!(
            "{run_id},{:.6},{:.6},{:.6},{:.6}",
            self.auc_top10, self.auc_top100, self.diversity_top100, self.novelty_top100
        )
    }
}

/// Metrics of a history given in call order: `ys[i]`, `keys[i]` and
/// `fps[i]` describe the molecule of call `i + 1`. Diversity and novelty use
/// the 100 best molecules; diversity is 0 for fewer than two.
pub fn summarize(ys: &[f64], keys: &[String], fps: &[Fingerprint], train: &[Fingerprint], budget: usize) -> Result<RunMetrics> {
    let top: Vec<Fingerprint> = top_n_indices(ys, keys, 100).into_iter().map(|i| fps[i].clone()).collect();
    Ok(RunMetrics {
        auc_top10: auc_topk(ys, 10, budget)?,
        auc_top100: auc_topk(ys, 100, budget)?,
        diversity_top100: if top.len() < 2 { 0.0 } else { diversity(&top)? },
        novelty_top100: novelty(&top, train)?,
    })
}
