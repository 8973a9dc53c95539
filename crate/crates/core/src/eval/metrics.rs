use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Label;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Mean of the per-class recalls, `(TPR + TNR) / 2`, with `Delayed` as the
/// positive class.
pub fn balanced_accuracy(labels: &[Label], predictions: &[Label]) -> Result<f64, MetricError> {
    if labels.len() != predictions.len() {
        return Err(MetricError::LengthMismatch {
            left: labels.len(),
            right: predictions.len(),
        });
    }
    let mut counts = [[0usize; 2]; 2];
    for (l, p) in labels.iter().zip(predictions) {
        counts[*l as usize][*p as usize] += 1;
    }
    let recall = |c: usize| {
        let total = counts[c][0] + counts[c][1];
        (total > 0).then(|| counts[c][c] as f64 / total as f64)
    };
    match (recall(0), recall(1)) {
        (Some(a), Some(b)) => Ok((a + b) / 2.0),
        _ => Err(MetricError::UndefinedMetric(
            "labels contain a single class".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    /// Percent.
    pub value: f64,
    pub months_used: usize,
    /// Months with zero actual value, left out of the mean.
    pub months_skipped: usize,
}

/// Mean absolute percentage error over aligned series, skipping months whose
/// actual value is zero.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<Mape, MetricError> {
    if actual.len() != forecast.len() {
        return Err(MetricError::LengthMismatch {
            left: actual.len(),
            right: forecast.len(),
        });
    }
    let (sum, used) = actual
        .iter()
        .zip(forecast)
        .filter(|(a, _)| **a != 0.0)
        .fold((0.0, 0usize), |(s, n), (a, f)| (s + ((a - f) / a).abs(), n + 1));
    if used == 0 {
        return Err(MetricError::UndefinedMetric(
            "every actual month is zero".into(),
        ));
    }
    Ok(Mape {
        value: 100.0 * sum / used as f64,
        months_used: used,
        months_skipped: actual.len() - used,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
