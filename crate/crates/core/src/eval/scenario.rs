use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{mape, mean, median, Mape, MetricError};
use crate::calendar::Calendar;
use crate::cashflow::recurring::ticks;
use crate::cashflow::{forecast, CashFlowError, ForecastRequest};
use crate::classifier::{train_for_business, ClassifierConfig};
use crate::synthgen::SyntheticUser;
use crate::types::{DateRange, Invoice, Money, ProjectLedger, YearMonth};

/// `train_months` of history used to forecast the following `predict_months`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub train_months: u32,
    pub predict_months: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("data span of {available} months is shorter than the scenario's {needed}")]
    InsufficientSpan { needed: u32, available: u32 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("forecast failed: {0}")]
    Forecast(String),
}

impl From<CashFlowError> for ScenarioError {
    fn from(e: CashFlowError) -> Self {
        ScenarioError::Forecast(e.to_string())
    }
}

impl Scenario {
    pub fn new(train_months: u32, predict_months: u32) -> Result<Scenario, ScenarioError> {
        if train_months == 0 || predict_months == 0 {
            return Err(ScenarioError::InvalidScenario(format!(
                "{train_months}/{predict_months}: both parts must be at least one month"
            )));
        }
        Ok(Scenario {
            name: format!("{train_months}/{predict_months}"),
            train_months,
            predict_months,
        })
    }

    pub fn standard() -> Vec<Scenario> {
        [(9, 3), (6, 6), (1, 11)]
            .into_iter()
            .map(|(t, p)| Scenario::new(t, p).expect("valid"))
            .collect()
    }

    /// Parses a comma-separated list such as `9/3,6/6,1/11`.
    pub fn parse_list(s: &str) -> Result<Vec<Scenario>, ScenarioError> {
        s.split(',').map(|p| p.trim().parse()).collect()
    }

    pub fn split(&self, data_start: YearMonth) -> ScenarioSplit {
        let split = data_start.add_months(self.train_months as i32);
        let end = split.add_months(self.predict_months as i32);
        ScenarioSplit {
            train: DateRange::new(data_start.first_day(), split.pred().last_day()),
            horizon: DateRange::new(split.first_day(), end.pred().last_day()),
        }
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScenarioError::InvalidScenario(format!("expected X/Y, got {s:?}"));
        let (t, p) = s.split_once('/').ok_or_else(bad)?;
        Scenario::new(t.trim().parse().map_err(|_| bad())?, p.trim().parse().map_err(|_| bad())?)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.train_months, self.predict_months)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSplit {
    pub train: DateRange,
    pub horizon: DateRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OurMethod,
    NaiveMean,
}

/// Realized net cash flow per date: hourly sessions on their dates, flat fees
/// at completion, recurring ticks and invoice payments.
pub fn actual_daily(user: &SyntheticUser, range: &DateRange) -> BTreeMap<chrono::NaiveDate, Money> {
    let mut out: BTreeMap<_, Money> = BTreeMap::new();
    let ledger = &user.ledger;
    for task in ledger.hourly_projects.iter().flat_map(|p| &p.tasks) {
        if range.contains(task.session_date) {
            *out.entry(task.session_date).or_default() +=
                Money::from_f64_rounded(task.hours * task.wage.as_f64());
        }
    }
    for p in &ledger.flat_projects {
        if range.contains(p.completion_date) {
            *out.entry(p.completion_date).or_default() += p.fee;
        }
    }
    for item in &ledger.recurring_items {
        for d in ticks(item, range) {
            *out.entry(d).or_default() += item.amount;
        }
    }
    for inv in &user.invoices {
        if let Some(p) = inv.payment_date.filter(|p| range.contains(*p)) {
            *out.entry(p).or_default() += inv.amount;
        }
    }
    out
}

pub fn actual_monthly(user: &SyntheticUser, range: &DateRange) -> Vec<f64> {
    let daily = actual_daily(user, range);
    range
        .months()
        .into_iter()
        .map(|m| {
            daily
                .range(m.first_day()..=m.last_day())
                .map(|(_, v)| v.as_f64())
                .sum()
        })
        .collect()
}

/// What was knowable on the first day of the horizon.
pub fn forecast_request_at(user: &SyntheticUser, split: &ScenarioSplit) -> ForecastRequest {
    let cut = split.horizon.start_date;
    let src = &user.ledger;
    let mut ledger = ProjectLedger {
        hourly_projects: src.hourly_projects.clone(),
        flat_projects: src
            .flat_projects
            .iter()
            .filter(|p| p.start_date.is_none_or(|s| s < cut))
            .cloned()
            .collect(),
        recurring_items: src
            .recurring_items
            .iter()
            .filter(|r| r.anchor_date < cut)
            .cloned()
            .collect(),
        planned_items: Vec::new(),
    };
    for p in &mut ledger.hourly_projects {
        p.tasks.retain(|t| t.session_date < cut);
    }
    let visible = visible_invoices(&user.invoices, cut);
    let (history, open_invoices) = visible.into_iter().partition(Invoice::is_paid);
    ForecastRequest {
        ledger,
        open_invoices,
        history,
        horizon: split.horizon,
        history_window: split.train,
        integrate_ar: true,
        calendar: Calendar::MondayToFriday,
        grace_days: crate::types::DEFAULT_GRACE_DAYS,
    }
}

/// Invoices issued before `cut`, with payments on or after `cut` removed.
pub fn visible_invoices(invoices: &[Invoice], cut: chrono::NaiveDate) -> Vec<Invoice> {
    invoices
        .iter()
        .filter(|inv| inv.issue_date < cut)
        .map(|inv| {
            let mut inv = inv.clone();
            if inv.payment_date.is_some_and(|p| p >= cut) {
                inv.payment_date = None;
            }
            inv
        })
        .collect()
}

/// Monthly forecast of one user under `method`.
pub fn forecast_monthly(
    user: &SyntheticUser,
    split: &ScenarioSplit,
    method: Method,
    classifier: &ClassifierConfig,
) -> Result<Vec<f64>, ScenarioError> {
    let months = split.horizon.months();
    match method {
        Method::NaiveMean => {
            let total: f64 = actual_daily(user, &split.train).values().map(|m| m.as_f64()).sum();
            let daily = total / split.train.len_days() as f64;
            Ok(months.iter().map(|m| daily * f64::from(m.days())).collect())
        }
        Method::OurMethod => {
            let req = forecast_request_at(user, split);
            let known: Vec<Invoice> = req.history.iter().chain(&req.open_invoices).cloned().collect();
            let model = train_for_business(&known, &user.user_id, classifier).ok();
            let result = forecast(&req, model.as_ref())?;
            let by_month = result.aggregate.totals_by_month();
            Ok(months
                .iter()
                .map(|m| by_month.get(m).map_or(0.0, |v| v.as_f64()))
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserScore {
    pub user_id: String,
    pub actual: Vec<f64>,
    pub forecast: Vec<f64>,
    pub mape: Mape,
}

/// Runs one user through a scenario.
pub fn run_user(
    user: &SyntheticUser,
    data_start: YearMonth,
    data_months: u32,
    scenario: &Scenario,
    method: Method,
    classifier: &ClassifierConfig,
) -> Result<UserScore, ScenarioError> {
    let needed = scenario.train_months + scenario.predict_months;
    if needed > data_months {
        return Err(ScenarioError::InsufficientSpan {
            needed,
            available: data_months,
        });
    }
    let split = scenario.split(data_start);
    let forecast = forecast_monthly(user, &split, method, classifier)?;
    let actual = actual_monthly(user, &split.horizon);
    let mape = mape(&actual, &forecast)?;
    Ok(UserScore {
        user_id: user.user_id.clone(),
        actual,
        forecast,
        mape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub median_mape: f64,
    pub mean_mape: f64,
    /// MAPE of the month totals summed over all users.
    pub pooled_mape: f64,
    pub users_scored: usize,
    /// Users whose actuals were zero in every horizon month.
    pub users_skipped: usize,
    pub per_user: Vec<UserScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub our_method: MethodSummary,
    pub naive_mean: MethodSummary,
}

/// Full months covered by a dataset starting at `start` and spanning `days`.
pub fn full_months(start: chrono::NaiveDate, days: u32) -> (YearMonth, u32) {
    let first = if start.day() == 1 {
        YearMonth::of(start)
    } else {
        YearMonth::of(start).succ()
    };
    let end = start + chrono::Duration::days(i64::from(days));
    // the month containing `end` is complete only if `end` is its first day
    let last_exclusive = YearMonth::of(end);
    (first, first.months_until(last_exclusive).max(0) as u32)
}

/// Scores every user under one method.
pub fn run_scenario(
    users: &[SyntheticUser],
    data_start: YearMonth,
    data_months: u32,
    scenario: &Scenario,
    method: Method,
    classifier: &ClassifierConfig,
) -> Result<MethodSummary, ScenarioError> {
    let results: Vec<Result<UserScore, ScenarioError>> = users
        .par_iter()
        .map(|u| run_user(u, data_start, data_months, scenario, method, classifier))
        .collect();
    let mut per_user = Vec::with_capacity(users.len());
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(s) => per_user.push(s),
            Err(ScenarioError::Metric(MetricError::UndefinedMetric(_))) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let values: Vec<f64> = per_user.iter().map(|s| s.mape.value).collect();
    let months = per_user.first().map_or(0, |s| s.actual.len());
    let column_sum = |f: fn(&UserScore) -> &Vec<f64>| -> Vec<f64> {
        (0..months).map(|m| per_user.iter().map(|s| f(s)[m]).sum()).collect()
    };
    let all_actual = column_sum(|s| &s.actual);
    let all_forecast = column_sum(|s| &s.forecast);
    let pooled = mape(&all_actual, &all_forecast)?;
    Ok(MethodSummary {
        method,
        median_mape: median(&values).unwrap_or(0.0),
        mean_mape: mean(&values).unwrap_or(0.0),
        pooled_mape: pooled.value,
        users_scored: per_user.len(),
        users_skipped: skipped,
        per_user,
    })
}

/// Both methods on one scenario.
pub fn compare_methods(
    users: &[SyntheticUser],
    data_start: YearMonth,
    data_months: u32,
    scenario: &Scenario,
    classifier: &ClassifierConfig,
) -> Result<ScenarioReport, ScenarioError> {
    let (ours, naive) = rayon::join(
        || run_scenario(users, data_start, data_months, scenario, Method::OurMethod, classifier),
        || run_scenario(users, data_start, data_months, scenario, Method::NaiveMean, classifier),
    );
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        our_method: ours?,
        naive_mean: naive?,
    })
}
