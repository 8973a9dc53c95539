//! Decomposed cash-flow forecasting.
//!
//! Four independent sub-modules each produce a [`CashFlowSeries`]:
//!
//! * [`hourly`]: daily rate from logged work sessions, booked on working days;
//! * [`nonrecurring`]: monthly rule combining a six-month mean with planned items,
//!   plus the open invoices (optionally shifted by predicted delays, see
//!   [`receivables`]);
//! * [`flatrate`]: fixed fees on completion dates;
//! * [`recurring`]: weekly and monthly schedules.
//!
//! [`forecast`] runs all of them and merges the results. A missing data
//! category only ever yields an empty sub-series.

pub mod flatrate;
pub mod hourly;
pub mod nonrecurring;
pub mod receivables;
pub mod recurring;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::Calendar;
use crate::classifier::{DelayPrediction, Insight, TrainedModel};
use crate::types::{
    CashFlowSeries, DateRange, Invoice, LedgerError, Money, ProjectLedger, Source,
    DEFAULT_GRACE_DAYS,
};

pub use flatrate::forecast_flatrate;
pub use hourly::forecast_hourly;
pub use nonrecurring::forecast_nonrecurring;
pub use receivables::{integrate_ar, place_at_due_dates, ArIntegration};
pub use recurring::forecast_recurring;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CashFlowError {
    #[error("empty working history: hourly tasks exist but the history window has no working days")]
    EmptyWorkingHistory,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRequest {
    #[serde(default)]
    pub ledger: ProjectLedger,
    /// Unpaid invoices expected to be collected.
    #[serde(default)]
    pub open_invoices: Vec<Invoice>,
    /// Past invoices: the paid ones feed the monthly mean, all of them feed
    /// the delay features.
    #[serde(default)]
    pub history: Vec<Invoice>,
    pub horizon: DateRange,
    pub history_window: DateRange,
    #[serde(default)]
    pub integrate_ar: bool,
    #[serde(default)]
    pub calendar: Calendar,
    #[serde(default = "default_grace")]
    pub grace_days: u32,
}

fn default_grace() -> u32 {
    DEFAULT_GRACE_DAYS
}

impl ForecastRequest {
    pub fn validate(&self) -> Result<(), CashFlowError> {
        if self.horizon.is_empty() {
            return Err(CashFlowError::InvalidRequest("horizon is empty".into()));
        }
        if self.history_window.is_empty() {
            return Err(CashFlowError::InvalidRequest("history window is empty".into()));
        }
        if self.horizon.start_date <= self.history_window.end_date {
            return Err(CashFlowError::InvalidRequest(
                "horizon must start after the history window ends".into(),
            ));
        }
        if let Some(inv) = self.open_invoices.iter().find(|i| i.is_paid()) {
            return Err(CashFlowError::InvalidRequest(format!(
                "open invoice {} already has a payment date",
                inv.id
            )));
        }
        self.ledger.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// All entries of every sub-module, in canonical order.
    pub aggregate: CashFlowSeries,
    /// One series per sub-module; every source is present, possibly empty.
    pub per_module: BTreeMap<Source, CashFlowSeries>,
    pub at_risk_invoices: Vec<DelayPrediction>,
    pub insights: Vec<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ForecastResult {
    pub fn module(&self, source: Source) -> &CashFlowSeries {
        &self.per_module[&source]
    }

    /// `aggregate` summed per date equals the per-module sums per date.
    pub fn decomposition_holds(&self) -> bool {
        let mut sum: BTreeMap<_, Money> = BTreeMap::new();
        for series in self.per_module.values() {
            for (date, amount) in series.totals_by_date() {
                *sum.entry(date).or_default() += amount;
            }
        }
        sum == self.aggregate.totals_by_date()
    }
}

/// Runs the four sub-modules and merges them.
///
/// With `integrate_ar` set and a model supplied, open invoices are placed on
/// their predicted payment dates; otherwise on their due dates.
pub fn forecast(
    req: &ForecastRequest,
    model: Option<&TrainedModel>,
) -> Result<ForecastResult, CashFlowError> {
    req.validate()?;
    let mut warnings = Vec::new();

    let hourly = forecast_hourly(&req.ledger, &req.history_window, &req.horizon, req.calendar)?;

    let paid_history: Vec<Invoice> = req
        .history
        .iter()
        .filter(|inv| {
            inv.payment_date
                .is_some_and(|p| req.history_window.contains(p))
        })
        .cloned()
        .collect();
    let monthly = forecast_nonrecurring(
        &paid_history,
        &req.ledger.planned_items,
        &req.horizon,
        Some(req.history_window.start_date),
    );

    let ar = match (req.integrate_ar, model) {
        (true, Some(model)) => {
            let ar = integrate_ar(&req.open_invoices, &req.history, model, &req.horizon, req.grace_days);
            if ar.degenerate_model {
                warnings.push(
                    "delay model predicts a single class; open invoices placed on due dates".into(),
                );
            }
            ar
        }
        (true, None) => {
            warnings.push("no delay model available; open invoices placed on due dates".into());
            ArIntegration {
                series: place_at_due_dates(&req.open_invoices, &req.horizon),
                ..Default::default()
            }
        }
        (false, _) => ArIntegration {
            series: place_at_due_dates(&req.open_invoices, &req.horizon),
            ..Default::default()
        },
    };

    let mut per_module = BTreeMap::new();
    per_module.insert(Source::Hourly, hourly);
    per_module.insert(
        Source::Nonrecurring,
        CashFlowSeries::concat([&monthly, &ar.series]),
    );
    per_module.insert(
        Source::Flatrate,
        forecast_flatrate(&req.ledger.flat_projects, &req.horizon),
    );
    per_module.insert(
        Source::Recurring,
        forecast_recurring(&req.ledger.recurring_items, &req.horizon),
    );
    let aggregate = CashFlowSeries::concat(per_module.values());
    let insights = insights(&per_module, &ar.at_risk);

    Ok(ForecastResult {
        aggregate,
        per_module,
        at_risk_invoices: ar.at_risk,
        insights,
        warnings,
    })
}

fn insights(per_module: &BTreeMap<Source, CashFlowSeries>, at_risk: &[DelayPrediction]) -> Vec<String> {
    let mut out = Vec::new();
    let inflow = |s: &CashFlowSeries| -> i64 {
        s.entries.iter().map(|e| e.amount.0).filter(|a| *a > 0).sum()
    };
    let total_inflow: i64 = per_module.values().map(inflow).sum();
    if total_inflow > 0 {
        let mut shares: Vec<(Source, i64)> = per_module
            .iter()
            .map(|(s, series)| (*s, inflow(series)))
            .filter(|(_, v)| *v > 0)
            .collect();
        shares.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let parts: Vec<String> = shares
            .iter()
            .map(|(s, v)| format!("{s} {:.0}%", 100.0 * *v as f64 / total_inflow as f64))
            .collect();
        out.push(format!("forecast inflow driven by: {}", parts.join(", ")));
    }
    let empty: Vec<&str> = per_module
        .iter()
        .filter(|(_, s)| s.is_empty())
        .map(|(s, _)| s.name())
        .collect();
    if !empty.is_empty() {
        out.push(format!("no data in the horizon for: {}", empty.join(", ")));
    }
    for p in at_risk {
        out.push(format!(
            "invoice {} from customer {} is likely to be paid about {} days late (expected {})",
            p.invoice_id, p.customer_id, p.expected_delay_days, p.expected_payment_date
        ));
    }
    let mut deteriorating: Vec<&str> = at_risk
        .iter()
        .filter(|p| p.insight == Insight::Deteriorating)
        .map(|p| p.customer_id.as_str())
        .collect();
    deteriorating.sort_unstable();
    deteriorating.dedup();
    for cust in deteriorating {
        out.push(format!("customer {cust}: payment behaviour is deteriorating"));
    }
    out
}
