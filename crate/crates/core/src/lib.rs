//! Payment-delay prediction and decomposed cash-flow forecasting for
//! freelancers and small businesses.
//!
//! The crate has two halves that meet in [`cashflow::forecast`]:
//!
//! * accounts receivable: [`features`] turns a customer's invoice history into
//!   cooperation features and [`classifier`] trains a per-business SVM that
//!   labels open invoices as on time or delayed;
//! * cash flow: four sub-modules in [`cashflow`] forecast hourly work,
//!   non-recurring invoices, flat-rate projects and recurring items, and the
//!   classifier's delay estimates shift open invoices in time.
//!
//! [`synthgen`] produces seeded synthetic freelancer data and [`eval`] runs
//! cross-validation and backtests over it.

pub mod calendar;
pub mod cashflow;
pub mod classifier;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod synthgen;
pub mod types;

pub use calendar::Calendar;
pub use cashflow::{forecast, ForecastRequest, ForecastResult};
pub use classifier::{predict, train, train_for_business, DelayPrediction, TrainedModel};
pub use features::{build_features, compute_fma, compute_sma, FeatureSet, FeatureVector};
pub use types::{
    label_invoice, CashFlowEntry, CashFlowSeries, CustomerHistory, DateRange, Invoice, Label,
    Money, ProjectLedger, Source, YearMonth,
};

/// The guide in `book/` is compiled as doctests so its snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/getting-started.md")]
    mod getting_started {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/cashflow.md")]
    mod cashflow {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
