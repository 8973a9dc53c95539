//! Evaluation harness: cross-validated balanced accuracy with a feature
//! ablation, and train/predict backtests scored by MAPE against a naive
//! daily-mean baseline.

pub mod cv;
pub mod metrics;
pub mod scenario;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, cross_validate_samples, stratified_folds, CvConfig, CvReport, CvStatus, FoldScores};
pub use metrics::{balanced_accuracy, mape, Mape, MetricError};
pub use scenario::{compare_methods, run_scenario, Method, MethodSummary, Scenario, ScenarioError, ScenarioReport};

use crate::classifier::ClassifierConfig;
use crate::ingest;
use crate::synthgen::SyntheticDataset;
use crate::types::{group_by_customer, Invoice};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Most invoices kept per customer.
pub const MAX_INVOICES_PER_CUSTOMER: usize = 50;

/// Keeps each customer's `max_per_customer` earliest invoices, preserving the
/// input order of the survivors.
pub fn filter_dataset(invoices: &[Invoice], max_per_customer: usize) -> Vec<Invoice> {
    let keep: std::collections::HashSet<(String, String)> = group_by_customer(invoices)
        .into_values()
        .flat_map(|h| {
            h.invoices()
                .iter()
                .take(max_per_customer)
                .map(|i| (i.customer_id.clone(), i.id.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    invoices
        .iter()
        .filter(|i| keep.contains(&(i.customer_id.clone(), i.id.clone())))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
    pub cv: CvConfig,
    pub max_invoices_per_customer: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            scenarios: Scenario::standard(),
            cv: CvConfig::default(),
            max_invoices_per_customer: MAX_INVOICES_PER_CUSTOMER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub dataset_hash: String,
    pub config: EvalConfig,
    pub cross_validation: CvReport,
    pub scenarios: Vec<ScenarioReport>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error("{file}: {rejected} rows rejected")]
    Rejected { file: String, rejected: usize },
}

/// Cross-validates the pooled invoices of all users and backtests every
/// scenario.
pub fn evaluate(dataset: &SyntheticDataset, config: &EvalConfig) -> Result<EvalReport, EvalError> {
    let invoices: Vec<Invoice> = dataset.users.iter().flat_map(|u| u.invoices.iter().cloned()).collect();
    let invoices = filter_dataset(&invoices, config.max_invoices_per_customer);
    let mut cv_config = config.cv.clone();
    cv_config.seed = config.seed;
    let cross_validation = cross_validate(&invoices, &cv_config);

    let (start, months) = scenario::full_months(dataset.config.start_date, dataset.config.span_days);
    let classifier = ClassifierConfig {
        hyper: config.cv.hyper.clone(),
        grace_days: config.cv.grace_days,
        seed: config.seed,
    };
    let scenarios = config
        .scenarios
        .iter()
        .map(|s| compare_methods(&dataset.users, start, months, s, &classifier))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset_hash: dataset.manifest.dataset_hash.clone(),
        config: config.clone(),
        cross_validation,
        scenarios,
    })
}

/// Cross-validation on a local copy of the IBM late-payment CSV, capped at 50
/// invoices per customer.
pub fn evaluate_ibm_csv(path: &Path, config: &CvConfig) -> Result<CvReport, EvalError> {
    let report = ingest::ingest_ibm_late_payment(std::fs::File::open(path).map_err(ingest::IngestError::from)?)?;
    if report.invoices.is_empty() {
        return Err(EvalError::Rejected {
            file: path.display().to_string(),
            rejected: report.errors.len(),
        });
    }
    let invoices = filter_dataset(&report.invoices, MAX_INVOICES_PER_CUSTOMER);
    Ok(cross_validate(&invoices, config))
}
