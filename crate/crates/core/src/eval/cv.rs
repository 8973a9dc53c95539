use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{balanced_accuracy, mean, MetricError};
use crate::classifier::{labeled_samples, train, Hyperparameters, TrainError};
use crate::features::{FeatureSet, FeatureVector};
use crate::synthgen::user_rng;
use crate::types::{Invoice, Label, DEFAULT_GRACE_DAYS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub hyper: Hyperparameters,
    pub grace_days: u32,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            hyper: Hyperparameters::default(),
            grace_days: DEFAULT_GRACE_DAYS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvStatus {
    Ok,
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub status: CvStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub n_samples: usize,
    pub n_delayed: usize,
    pub n_on_time: usize,
    pub n_unlabelable: usize,
    /// All features.
    pub full: Option<FoldScores>,
    /// Without the moving-average features.
    pub base: Option<FoldScores>,
    /// `full.mean - base.mean`.
    pub ablation_delta: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CvError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Fold index per sample: each class is shuffled with a seeded RNG and dealt
/// round-robin, so fold class counts differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    let mut rng = user_rng(seed, 1 << 40);
    let mut offset = 0;
    for class in [Label::OnTime, Label::Delayed] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = (pos + offset) % k;
        }
        offset += labels.iter().filter(|l| **l == class).count();
    }
    assignment
}

/// Balanced accuracy of each held-out fold.
pub fn fold_scores(
    samples: &[(FeatureVector, Label)],
    folds: &[usize],
    k: usize,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<FoldScores, CvError> {
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (test, train_set): (Vec<_>, Vec<_>) = samples
                .iter()
                .zip(folds)
                .partition(|(_, fold)| **fold == f);
            let train_samples: Vec<(FeatureVector, Label)> =
                train_set.into_iter().map(|(s, _)| *s).collect();
            let model = train(&train_samples, hyper, seed)?;
            let labels: Vec<Label> = test.iter().map(|(s, _)| s.1).collect();
            let preds: Vec<Label> = test
                .iter()
                .map(|(s, _)| model.predict_label(&s.0.values(hyper.feature_set)))
                .collect();
            Ok(balanced_accuracy(&labels, &preds)?)
        })
        .collect::<Result<Vec<f64>, CvError>>()?;
    let mean = mean(&per_fold).unwrap_or(0.0);
    Ok(FoldScores { per_fold, mean })
}

fn insufficient(detail: String, n_delayed: usize, n_on_time: usize, n_unlabelable: usize) -> CvReport {
    CvReport {
        status: CvStatus::Insufficient,
        detail: Some(detail),
        n_samples: n_delayed + n_on_time,
        n_delayed,
        n_on_time,
        n_unlabelable,
        full: None,
        base: None,
        ablation_delta: None,
    }
}

/// Stratified k-fold cross-validation on labeled samples, run once with all
/// features and once without the moving-average features.
pub fn cross_validate_samples(samples: &[(FeatureVector, Label)], config: &CvConfig) -> CvReport {
    let n_delayed = samples.iter().filter(|(_, l)| *l == Label::Delayed).count();
    let n_on_time = samples.len() - n_delayed;
    let k = config.folds.max(2);
    if n_delayed < k || n_on_time < k {
        return insufficient(
            format!("need at least {k} samples per class, got {n_delayed} delayed and {n_on_time} on time"),
            n_delayed,
            n_on_time,
            0,
        );
    }
    let labels: Vec<Label> = samples.iter().map(|(_, l)| *l).collect();
    let folds = stratified_folds(&labels, k, config.seed);
    let run = |set: FeatureSet| {
        fold_scores(samples, &folds, k, &config.hyper.clone().with_feature_set(set), config.seed)
    };
    match (run(FeatureSet::Full), run(FeatureSet::Base)) {
        (Ok(full), Ok(base)) => CvReport {
            status: CvStatus::Ok,
            detail: None,
            n_samples: samples.len(),
            n_delayed,
            n_on_time,
            n_unlabelable: 0,
            ablation_delta: Some(full.mean - base.mean),
            full: Some(full),
            base: Some(base),
        },
        (Err(e), _) | (_, Err(e)) => insufficient(e.to_string(), n_delayed, n_on_time, 0),
    }
}

/// Builds features for every paid invoice and cross-validates them.
pub fn cross_validate(invoices: &[Invoice], config: &CvConfig) -> CvReport {
    let (samples, unlabelable) = labeled_samples(invoices, config.grace_days);
    let mut report = cross_validate_samples(&samples, config);
    report.n_unlabelable = unlabelable;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Money;

    fn fv(x: f64) -> FeatureVector {
        FeatureVector {
            amount: x,
            payment_term_days: 14.0,
            late_ratio: 0.0,
            avg_delay_days: 0.0,
            outstanding_count: 0,
            paid_amount_total: Money::ZERO,
            late_amount_total: Money::ZERO,
            fma: 0.0,
            sma: 7.0,
            ma_ratio: 0.0,
            ma_gradient: 0.0,
        }
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<Label> = (0..53)
            .map(|i| if i % 4 == 0 { Label::Delayed } else { Label::OnTime })
            .collect();
        let folds = stratified_folds(&labels, 5, 9);
        for f in 0..5 {
            let d = (0..53).filter(|&i| folds[i] == f && labels[i] == Label::Delayed).count();
            assert!((2..=3).contains(&d), "fold {f}: {d}");
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 9));
    }

    #[test]
    fn separable_set_scores_one() {
        let samples: Vec<_> = (0..40)
            .map(|i| {
                let delayed = i % 2 == 0;
                let x = i as f64 + if delayed { 100.0 } else { 0.0 };
                (fv(x), if delayed { Label::Delayed } else { Label::OnTime })
            })
            .collect();
        let r = cross_validate_samples(&samples, &CvConfig::default());
        assert_eq!(r.status, CvStatus::Ok);
        assert_eq!(r.full.unwrap().mean, 1.0);
    }

    #[test]
    fn too_few_samples_is_reported() {
        let samples = vec![(fv(1.0), Label::OnTime), (fv(2.0), Label::Delayed)];
        let r = cross_validate_samples(&samples, &CvConfig::default());
        assert_eq!(r.status, CvStatus::Insufficient);
        assert!(r.full.is_none());
    }
}
