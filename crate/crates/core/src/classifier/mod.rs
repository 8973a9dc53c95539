//! Per-business payment-delay classifier.
//!
//! The primary model is a soft-margin SVM trained from scratch with
//! [`smo`]; a distance-weighted k-nearest-neighbour model is available as a
//! baseline. Features are standardized before training and the scaling is
//! stored with the model.

pub mod smo;

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{build_features_with_grace, FeatureSet, FeatureVector};
use crate::types::{group_by_customer, label_invoice, Invoice, Label, DEFAULT_GRACE_DAYS};
use smo::{Kernel, SolverParams};

/// Version of the model JSON document.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SvmRbf,
    SvmLinear,
    KnnBaseline,
}

/// RBF width: either the `"scale"` heuristic or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Named(GammaHeuristic),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaHeuristic {
    Scale,
}

impl Gamma {
    pub const SCALE: Gamma = Gamma::Named(GammaHeuristic::Scale);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub kind: ModelKind,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Gamma,
    pub k: usize,
    #[serde(default)]
    pub feature_set: FeatureSet,
    /// `|ma_gradient|` above which a customer's trend is reported.
    #[serde(default = "default_insight_threshold")]
    pub insight_threshold_days: f64,
}

fn default_insight_threshold() -> f64 {
    1.0
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            kind: ModelKind::SvmRbf,
            c: 1.0,
            gamma: Gamma::SCALE,
            k: 5,
            feature_set: FeatureSet::Full,
            insight_threshold_days: default_insight_threshold(),
        }
    }
}

impl Hyperparameters {
    pub fn knn() -> Self {
        Hyperparameters {
            kind: ModelKind::KnnBaseline,
            ..Default::default()
        }
    }

    pub fn with_feature_set(mut self, set: FeatureSet) -> Self {
        self.feature_set = set;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaling {
    /// Population mean and standard deviation per column; zero-variance
    /// columns get a standard deviation of 1.
    pub fn fit(rows: &[Vec<f64>]) -> Scaling {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if !(*s > 0.0) || !s.is_finite() {
                *s = 1.0;
            }
        }
        Scaling { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    MajorityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    #[serde(default)]
    pub business_id: Option<String>,
    pub n_samples: usize,
    pub n_delayed: usize,
    pub n_on_time: usize,
    /// Unpaid invoices skipped during training.
    #[serde(default)]
    pub n_unlabelable: usize,
    pub seed: u64,
    #[serde(default)]
    pub degenerate: Option<Degenerate>,
    #[serde(default)]
    pub solver_iterations: usize,
    #[serde(default)]
    pub converged: bool,
}

/// A trained classifier, serializable to a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub hyper: Hyperparameters,
    /// Resolved kernel (the `"scale"` gamma replaced by its value).
    pub kernel: Kernel,
    pub scaling: Scaling,
    /// Standardized support vectors (all training points for kNN).
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for the SVM, `y_i` for kNN.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Set when the model always predicts one label.
    #[serde(default)]
    pub constant_label: Option<Label>,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("insufficient data: {0} labeled samples, need at least 2")]
    InsufficientData(usize),
    #[error("sample {0} has non-finite features")]
    NonFinite(usize),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model schema version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Insight {
    Improving,
    Stable,
    Deteriorating,
}

impl Insight {
    pub fn from_gradient(ma_gradient: f64, threshold: f64) -> Insight {
        if ma_gradient > threshold {
            Insight::Deteriorating
        } else if ma_gradient < -threshold {
            Insight::Improving
        } else {
            Insight::Stable
        }
    }
}

/// Output of [`predict`] for one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Signed decision value; positive means delayed.
    pub score: f64,
    pub expected_delay_days: u32,
    pub insight: Insight,
}

/// A prediction bound to a concrete invoice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayPrediction {
    pub invoice_id: String,
    pub customer_id: String,
    pub label: Label,
    pub score: f64,
    pub expected_delay_days: u32,
    pub insight: Insight,
    pub expected_payment_date: NaiveDate,
}

fn check_hyper(h: &Hyperparameters) -> Result<(), TrainError> {
    if !(h.c > 0.0 && h.c.is_finite()) {
        return Err(TrainError::InvalidHyper(format!("C must be positive, got {}", h.c)));
    }
    if let Gamma::Value(g) = h.gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(TrainError::InvalidHyper(format!("gamma must be positive, got {g}")));
        }
    }
    if h.k == 0 {
        return Err(TrainError::InvalidHyper("k must be positive".into()));
    }
    Ok(())
}

/// Trains a classifier on labeled feature vectors.
///
/// A training set containing only one class yields a constant model flagged
/// [`Degenerate::MajorityClass`]. The result is a pure function of the
/// inputs; `seed` is recorded for provenance.
pub fn train(
    samples: &[(FeatureVector, Label)],
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainedModel, TrainError> {
    check_hyper(hyper)?;
    if samples.len() < 2 {
        return Err(TrainError::InsufficientData(samples.len()));
    }
    if let Some(i) = samples.iter().position(|(fv, _)| !fv.is_finite()) {
        return Err(TrainError::NonFinite(i));
    }
    let raw: Vec<Vec<f64>> = samples
        .iter()
        .map(|(fv, _)| fv.values(hyper.feature_set))
        .collect();
    let labels: Vec<Label> = samples.iter().map(|(_, l)| *l).collect();
    train_matrix(&raw, &labels, hyper, seed)
}

/// Trains on raw (unscaled) feature rows.
pub fn train_matrix(
    raw: &[Vec<f64>],
    labels: &[Label],
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainedModel, TrainError> {
    check_hyper(hyper)?;
    let n = raw.len();
    if n < 2 {
        return Err(TrainError::InsufficientData(n));
    }
    let n_delayed = labels.iter().filter(|l| **l == Label::Delayed).count();
    let n_on_time = n - n_delayed;
    let scaling = Scaling::fit(raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| scaling.apply(r)).collect();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();

    let mut metadata = TrainingMetadata {
        business_id: None,
        n_samples: n,
        n_delayed,
        n_on_time,
        n_unlabelable: 0,
        seed,
        degenerate: None,
        solver_iterations: 0,
        converged: true,
    };
    let mut model = TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        kind: hyper.kind,
        hyper: hyper.clone(),
        kernel: Kernel::Linear,
        scaling,
        support_vectors: Vec::new(),
        dual_coefficients: Vec::new(),
        bias: 0.0,
        constant_label: None,
        metadata: metadata.clone(),
    };

    if n_delayed == 0 || n_on_time == 0 {
        let label = labels[0];
        metadata.degenerate = Some(Degenerate::MajorityClass);
        model.constant_label = Some(label);
        model.bias = label.sign();
        model.metadata = metadata;
        return Ok(model);
    }

    match hyper.kind {
        ModelKind::KnnBaseline => {
            model.kernel = Kernel::Linear;
            model.support_vectors = x;
            model.dual_coefficients = y;
        }
        ModelKind::SvmLinear | ModelKind::SvmRbf => {
            let kernel = match hyper.kind {
                ModelKind::SvmLinear => Kernel::Linear,
                _ => Kernel::Rbf {
                    gamma: resolve_gamma(hyper.gamma, &x),
                },
            };
            let weight = |count: usize| hyper.c * n as f64 / (2.0 * count as f64);
            let (c_pos, c_neg) = (weight(n_delayed), weight(n_on_time));
            let upper: Vec<f64> = y.iter().map(|&s| if s > 0.0 { c_pos } else { c_neg }).collect();
            let sol = smo::solve(&x, &y, &upper, &kernel, &SolverParams::default());
            metadata.solver_iterations = sol.iterations;
            metadata.converged = sol.converged;
            for ((xi, yi), a) in x.into_iter().zip(&y).zip(&sol.alpha) {
                if *a > 0.0 {
                    model.support_vectors.push(xi);
                    model.dual_coefficients.push(a * yi);
                }
            }
            model.kernel = kernel;
            model.bias = -sol.rho;
        }
    }
    model.metadata = metadata;
    Ok(model)
}

/// `1 / (n_features * Var(X))` over all standardized entries.
fn resolve_gamma(gamma: Gamma, x: &[Vec<f64>]) -> f64 {
    match gamma {
        Gamma::Value(g) => g,
        Gamma::Named(GammaHeuristic::Scale) => {
            let dim = x.first().map_or(1, Vec::len).max(1);
            let all: Vec<f64> = x.iter().flatten().copied().collect();
            let mean = all.iter().sum::<f64>() / all.len() as f64;
            let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / all.len() as f64;
            if var > 0.0 {
                1.0 / (dim as f64 * var)
            } else {
                1.0
            }
        }
    }
}

impl TrainedModel {
    pub fn is_degenerate(&self) -> bool {
        self.metadata.degenerate.is_some()
    }

    /// Signed decision value for a raw (unscaled) feature row.
    pub fn decision_value(&self, raw: &[f64]) -> f64 {
        if self.constant_label.is_some() {
            return self.bias;
        }
        let x = self.scaling.apply(raw);
        match self.kind {
            ModelKind::KnnBaseline => self.knn_score(&x),
            _ => {
                self.support_vectors
                    .iter()
                    .zip(&self.dual_coefficients)
                    .map(|(sv, c)| c * self.kernel.eval(sv, &x))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }

    fn knn_score(&self, x: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .support_vectors
            .iter()
            .enumerate()
            .map(|(i, sv)| {
                let d2: f64 = sv.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut num, mut den) = (0.0, 0.0);
        for &(d, i) in dist.iter().take(self.hyper.k) {
            let w = 1.0 / (d + 1e-6);
            num += w * self.dual_coefficients[i];
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    pub fn predict_label(&self, raw: &[f64]) -> Label {
        if let Some(label) = self.constant_label {
            return label;
        }
        if self.decision_value(raw) > 0.0 {
            Label::Delayed
        } else {
            Label::OnTime
        }
    }

    /// Canonical JSON encoding; decoding it yields an identical model.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<TrainedModel, ModelIoError> {
        let model: TrainedModel = serde_json::from_str(s)?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ModelIoError::Version(model.schema_version));
        }
        Ok(model)
    }
}

/// Classifies one feature vector.
pub fn predict(model: &TrainedModel, fv: &FeatureVector) -> Prediction {
    let raw = fv.values(model.hyper.feature_set);
    let score = model.decision_value(&raw);
    let label = model.predict_label(&raw);
    let expected_delay_days = match label {
        Label::Delayed => fv.fma.max(fv.sma).round().max(0.0) as u32,
        Label::OnTime => 0,
    };
    Prediction {
        label,
        score,
        expected_delay_days,
        insight: Insight::from_gradient(fv.ma_gradient, model.hyper.insight_threshold_days),
    }
}

/// Predicts each invoice against the customer histories formed by `history`
/// plus the targets themselves.
pub fn predict_invoices(
    model: &TrainedModel,
    history: &[Invoice],
    targets: &[Invoice],
    grace_days: u32,
) -> Vec<DelayPrediction> {
    let histories = group_by_customer(history.iter().chain(targets.iter().filter(|t| {
        !history.iter().any(|h| h.id == t.id && h.customer_id == t.customer_id)
    })));
    targets
        .iter()
        .map(|inv| {
            let fv = build_features_with_grace(&histories[&inv.customer_id], inv, grace_days);
            let p = predict(model, &fv);
            DelayPrediction {
                invoice_id: inv.id.clone(),
                customer_id: inv.customer_id.clone(),
                label: p.label,
                score: p.score,
                expected_delay_days: p.expected_delay_days,
                insight: p.insight,
                expected_payment_date: inv.due_date
                    + Duration::days(i64::from(p.expected_delay_days)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    #[serde(default)]
    pub hyper: Hyperparameters,
    #[serde(default = "default_grace")]
    pub grace_days: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_grace() -> u32 {
    DEFAULT_GRACE_DAYS
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hyper: Hyperparameters::default(),
            grace_days: DEFAULT_GRACE_DAYS,
            seed: 0,
        }
    }
}

/// Labeled samples for every paid invoice, plus the number of unpaid ones.
pub fn labeled_samples(
    invoices: &[Invoice],
    grace_days: u32,
) -> (Vec<(FeatureVector, Label)>, usize) {
    let histories: BTreeMap<_, _> = group_by_customer(invoices);
    let mut samples = Vec::new();
    let mut unlabelable = 0;
    for history in histories.values() {
        for inv in history.invoices() {
            match label_invoice(inv, grace_days) {
                Ok(label) => samples.push((build_features_with_grace(history, inv, grace_days), label)),
                Err(_) => unlabelable += 1,
            }
        }
    }
    (samples, unlabelable)
}

/// Trains one business's model from its raw invoice list.
pub fn train_for_business(
    invoices: &[Invoice],
    business_id: &str,
    config: &ClassifierConfig,
) -> Result<TrainedModel, TrainError> {
    let (samples, unlabelable) = labeled_samples(invoices, config.grace_days);
    let mut model = train(&samples, &config.hyper, config.seed)?;
    model.metadata.business_id = Some(business_id.to_owned());
    model.metadata.n_unlabelable = unlabelable;
    Ok(model)
}
