//! Evaluation metrics over `n x k` matrices of times (seconds).
//!
//! All averages run over every item-step entry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{SnapshotPool, TimeVector, ViewCount};
use crate::model::{ModelError, PredictorModel};

pub const DEFAULT_CUTOFF: f64 = 1.0;
pub const DEFAULT_EVAL_SCENES: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no entries to evaluate")]
    Empty,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("negative real value at row {row}, column {col}")]
    NegativeReal { row: usize, col: usize },
}

fn check(reals: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<usize, MetricsError> {
    if reals.len() != preds.len() {
        return Err(MetricsError::ShapeMismatch(format!("{} vs {} rows", reals.len(), preds.len())));
    }
    let mut n = 0;
    for (i, (r, p)) in reals.iter().zip(preds).enumerate() {
        if r.len() != p.len() || r.len() != reals[0].len() {
            return Err(MetricsError::ShapeMismatch(format!("row {i}: {} vs {} columns", r.len(), p.len())));
        }
        for (j, (a, b)) in r.iter().zip(p).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(MetricsError::NonFinite { row: i, col: j });
            }
        }
        n += r.len();
    }
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(n)
}

fn entries<'a>(reals: &'a [Vec<f64>], preds: &'a [Vec<f64>]) -> impl Iterator<Item = (f64, f64)> + 'a {
    reals.iter().zip(preds).flat_map(|(r, p)| r.iter().copied().zip(p.iter().copied()))
}

/// Mean and population standard deviation of `|real - pred|`.
pub fn mae(reals: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<(f64, f64), MetricsError> {
    let n = check(reals, preds)? as f64;
    let mean = entries(reals, preds).map(|(r, p)| (r - p).abs()).sum::<f64>() / n;
    let var = entries(reals, preds).map(|(r, p)| ((r - p).abs() - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Zero-aware MAPE in percent: an entry with `real == 0` scores 0 if
/// `pred < 1` and 100 otherwise; other entries score `|real - pred| / real`.
pub fn mape(reals: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let n = check(reals, preds)? as f64;
    for (i, r) in reals.iter().enumerate() {
        if let Some(j) = r.iter().position(|&v| v < 0.0) {
            return Err(MetricsError::NegativeReal { row: i, col: j });
        }
    }
    let sum: f64 = entries(reals, preds)
        .map(|(r, p)| {
            if r == 0.0 {
                if p < 1.0 { 0.0 } else { 100.0 }
            } else {
                (r - p).abs() / r * 100.0
            }
        })
        .sum();
    Ok(sum / n)
}

/// `100 / N * sum |real - pred| / (|real| + |pred|)`, with 0/0 entries
/// contributing 0.
pub fn smape(reals: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let n = check(reals, preds)? as f64;
    let sum: f64 = entries(reals, preds)
        .map(|(r, p)| {
            let d = r.abs() + p.abs();
            if d == 0.0 { 0.0 } else { (r - p).abs() / d }
        })
        .sum();
    Ok(100.0 * sum / n)
}

/// Micro-averaged F1 of the "step needed" decision `value >= cutoff`.
/// Returns 1 when there are no positives in either matrix.
pub fn f1_at_cutoff(reals: &[Vec<f64>], preds: &[Vec<f64>], cutoff: f64) -> Result<f64, MetricsError> {
    check(reals, preds)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (r, p) in entries(reals, preds) {
        match (r >= cutoff, p >= cutoff) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub mae_std: f64,
    pub mape: f64,
    pub smape: f64,
    pub f1: f64,
    pub n_entries: usize,
}

impl EvalReport {
    pub fn from_matrices(reals: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let n_entries = check(reals, preds)?;
        let (mae, mae_std) = mae(reals, preds)?;
        Ok(Self {
            mae,
            mae_std,
            mape: mape(reals, preds)?,
            smape: smape(reals, preds)?,
            f1: f1_at_cutoff(reals, preds, DEFAULT_CUTOFF)?,
            n_entries,
        })
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Predicts every item (averaging `n_eval_scenes` random scenes from its
/// pool) and scores the predictions against the labels in item order.
pub fn evaluate(
    model: &PredictorModel,
    items: &[(&SnapshotPool, &TimeVector)],
    n_eval_scenes: usize,
    views: ViewCount,
    r_max: f64,
    seed: u64,
) -> Result<(EvalReport, Vec<Vec<f64>>), EvalError> {
    let mut reals = Vec::with_capacity(items.len());
    let mut preds = Vec::with_capacity(items.len());
    for (pool, target) in items {
        preds.push(model.predict_pool(pool, n_eval_scenes, views, r_max, seed)?);
        reals.push(target.times().to_vec());
    }
    Ok((EvalReport::from_matrices(&reals, &preds)?, preds))
}
