//! Shared domain model: invoices, per-customer histories, project ledgers and
//! cash-flow series.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default number of days past the due date that still counts as on time.
pub const DEFAULT_GRACE_DAYS: u32 = 7;

/// An amount of money in integer minor currency units (cents).
///
/// Positive values are income, negative values are expenses.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn minor(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Rounds a real-valued amount to minor units, ties to even.
    pub fn from_f64_rounded(value: f64) -> Money {
        Money(value.round_ties_even() as i64)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl std::ops::Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A calendar month, serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<YearMonth> {
        (1..=12).contains(&month).then_some(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> YearMonth {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn last_day(self) -> NaiveDate {
        self.succ().first_day().pred_opt().expect("date in range")
    }

    pub fn days(self) -> u32 {
        self.last_day().day()
    }

    /// The given day of this month, clamped to the month's last day.
    pub fn day_clamped(self, day: u32) -> NaiveDate {
        let day = day.clamp(1, self.days());
        NaiveDate::from_ymd_opt(self.year, self.month, day).expect("clamped day")
    }

    pub fn succ(self) -> YearMonth {
        self.add_months(1)
    }

    pub fn pred(self) -> YearMonth {
        self.add_months(-1)
    }

    pub fn add_months(self, n: i32) -> YearMonth {
        let idx = self.index() + n;
        YearMonth {
            year: idx.div_euclid(12),
            month: (idx.rem_euclid(12) + 1) as u32,
        }
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i32 {
        other.index() - self.index()
    }

    fn index(self) -> i32 {
        self.year * 12 + self.month as i32 - 1
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        YearMonth::new(year, month).ok_or_else(|| format!("month out of range in {s:?}"))
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl DateRange {
    pub fn new(start_date: NaiveDate, end_date: NaiveDate) -> DateRange {
        DateRange {
            start_date,
            end_date,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.end_date < self.start_date
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start_date <= date && date <= self.end_date
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start_date
            .iter_days()
            .take_while(move |d| *d <= self.end_date)
    }

    pub fn len_days(&self) -> i64 {
        if self.is_empty() {
            0
        } else {
            (self.end_date - self.start_date).num_days() + 1
        }
    }

    /// Calendar months overlapping the range, in order.
    pub fn months(&self) -> Vec<YearMonth> {
        if self.is_empty() {
            return Vec::new();
        }
        let first = YearMonth::of(self.start_date);
        let last = YearMonth::of(self.end_date);
        (0..=first.months_until(last))
            .map(|k| first.add_months(k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvoiceError {
    #[error("amount must be non-zero")]
    ZeroAmount,
    #[error("due date {due} precedes issue date {issue}")]
    DueBeforeIssue { issue: NaiveDate, due: NaiveDate },
    #[error("payment date {paid} precedes issue date {issue}")]
    PaidBeforeIssue { issue: NaiveDate, paid: NaiveDate },
    #[error("{0} must not be empty")]
    EmptyId(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("invoice {0} is unpaid and cannot be labeled")]
    Unlabelable(String),
}

/// A receivable (or, with a negative amount, a payable).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInvoice")]
pub struct Invoice {
    #[serde(rename = "invoice_id")]
    pub id: String,
    pub customer_id: String,
    pub amount: Money,
    pub issue_date: NaiveDate,
    pub due_date: NaiveDate,
    #[serde(default)]
    pub payment_date: Option<NaiveDate>,
}

#[derive(Deserialize)]
struct RawInvoice {
    invoice_id: String,
    customer_id: String,
    amount: Money,
    issue_date: NaiveDate,
    due_date: NaiveDate,
    #[serde(default)]
    payment_date: Option<NaiveDate>,
}

impl TryFrom<RawInvoice> for Invoice {
    type Error = InvoiceError;

    fn try_from(raw: RawInvoice) -> Result<Self, Self::Error> {
        Invoice::new(
            raw.invoice_id,
            raw.customer_id,
            raw.amount,
            raw.issue_date,
            raw.due_date,
            raw.payment_date,
        )
    }
}

impl Invoice {
    pub fn new(
        id: impl Into<String>,
        customer_id: impl Into<String>,
        amount: Money,
        issue_date: NaiveDate,
        due_date: NaiveDate,
        payment_date: Option<NaiveDate>,
    ) -> Result<Invoice, InvoiceError> {
        let id = id.into();
        let customer_id = customer_id.into();
        if id.is_empty() {
            return Err(InvoiceError::EmptyId("invoice_id"));
        }
        if customer_id.is_empty() {
            return Err(InvoiceError::EmptyId("customer_id"));
        }
        if amount.is_zero() {
            return Err(InvoiceError::ZeroAmount);
        }
        if due_date < issue_date {
            return Err(InvoiceError::DueBeforeIssue {
                issue: issue_date,
                due: due_date,
            });
        }
        if let Some(paid) = payment_date {
            if paid < issue_date {
                return Err(InvoiceError::PaidBeforeIssue {
                    issue: issue_date,
                    paid,
                });
            }
        }
        Ok(Invoice {
            id,
            customer_id,
            amount,
            issue_date,
            due_date,
            payment_date,
        })
    }

    pub fn is_paid(&self) -> bool {
        self.payment_date.is_some()
    }

    /// Whether the invoice had been paid by the end of `date`.
    pub fn is_paid_by(&self, date: NaiveDate) -> bool {
        self.payment_date.is_some_and(|p| p <= date)
    }

    /// Days between due date and payment; negative for early payments.
    pub fn delay_days(&self) -> Option<i64> {
        self.payment_date.map(|p| (p - self.due_date).num_days())
    }

    pub fn payment_term_days(&self) -> i64 {
        (self.due_date - self.issue_date).num_days()
    }

    /// Chronological order with invoice id as the tie-break.
    pub fn chronological_cmp(&self, other: &Invoice) -> Ordering {
        self.issue_date
            .cmp(&other.issue_date)
            .then_with(|| self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    OnTime,
    Delayed,
}

impl Label {
    /// `+1` for delayed, `-1` for on time.
    pub fn sign(self) -> f64 {
        match self {
            Label::Delayed => 1.0,
            Label::OnTime => -1.0,
        }
    }

    pub fn from_delay(delay_days: i64, grace_days: u32) -> Label {
        if delay_days > i64::from(grace_days) {
            Label::Delayed
        } else {
            Label::OnTime
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::OnTime => "on_time",
            Label::Delayed => "delayed",
        })
    }
}

/// Labels a paid invoice: delayed iff paid more than `grace_days` after the due date.
pub fn label_invoice(inv: &Invoice, grace_days: u32) -> Result<Label, LabelError> {
    inv.delay_days()
        .map(|d| Label::from_delay(d, grace_days))
        .ok_or_else(|| LabelError::Unlabelable(inv.id.clone()))
}

/// One customer's invoices in chronological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerHistory {
    pub customer_id: String,
    invoices: Vec<Invoice>,
}

impl CustomerHistory {
    /// Builds a history from invoices of `customer_id`; others are ignored.
    pub fn new(customer_id: impl Into<String>, invoices: impl IntoIterator<Item = Invoice>) -> Self {
        let customer_id = customer_id.into();
        let mut invoices: Vec<Invoice> = invoices
            .into_iter()
            .filter(|inv| inv.customer_id == customer_id)
            .collect();
        invoices.sort_by(Invoice::chronological_cmp);
        CustomerHistory {
            customer_id,
            invoices,
        }
    }

    pub fn invoices(&self) -> &[Invoice] {
        &self.invoices
    }

    pub fn len(&self) -> usize {
        self.invoices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.invoices.is_empty()
    }

    pub fn position(&self, invoice_id: &str) -> Option<usize> {
        self.invoices.iter().position(|inv| inv.id == invoice_id)
    }

    pub fn paid_count(&self) -> usize {
        self.invoices.iter().filter(|inv| inv.is_paid()).count()
    }

    /// Delays of paid invoices, in invoice order.
    pub fn delays(&self) -> Vec<i64> {
        self.invoices.iter().filter_map(Invoice::delay_days).collect()
    }
}

/// Groups invoices by customer; each history is chronologically sorted.
pub fn group_by_customer<'a>(
    invoices: impl IntoIterator<Item = &'a Invoice>,
) -> BTreeMap<String, CustomerHistory> {
    let mut buckets: BTreeMap<String, Vec<Invoice>> = BTreeMap::new();
    for inv in invoices {
        buckets
            .entry(inv.customer_id.clone())
            .or_default()
            .push(inv.clone());
    }
    buckets
        .into_iter()
        .map(|(cust, invs)| {
            let history = CustomerHistory::new(cust.clone(), invs);
            (cust, history)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub hours: f64,
    /// Hourly wage in minor units.
    pub wage: Money,
    pub session_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProject {
    pub id: String,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatRateProject {
    pub id: String,
    pub fee: Money,
    pub completion_date: NaiveDate,
    /// When the engagement was agreed; projects contracted later are unknown
    /// to a forecast made earlier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Weekly,
    Monthly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurringItem {
    pub id: String,
    pub amount: Money,
    pub period: Period,
    pub anchor_date: NaiveDate,
    #[serde(default)]
    pub end_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedItem {
    pub id: String,
    pub amount: Money,
    pub month: YearMonth,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("task {task} of project {project}: hours and wage must be finite and non-negative")]
    NegativeTask { project: String, task: String },
    #[error("flat-rate project {0}: fee must be positive")]
    NonPositiveFee(String),
    #[error("{kind} item {id}: amount must be non-zero")]
    ZeroAmount { kind: &'static str, id: String },
    #[error("recurring item {0}: end date precedes anchor date")]
    EndBeforeAnchor(String),
}

/// Everything the cash-flow forecaster knows about a business besides invoices.
///
/// Any of the four lists may be empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectLedger {
    #[serde(default)]
    pub hourly_projects: Vec<HourlyProject>,
    #[serde(default)]
    pub flat_projects: Vec<FlatRateProject>,
    #[serde(default)]
    pub recurring_items: Vec<RecurringItem>,
    #[serde(default)]
    pub planned_items: Vec<PlannedItem>,
}

impl ProjectLedger {
    pub fn validate(&self) -> Result<(), LedgerError> {
        for p in &self.hourly_projects {
            for t in &p.tasks {
                if !(t.hours.is_finite() && t.hours >= 0.0 && t.wage.0 >= 0) {
                    return Err(LedgerError::NegativeTask {
                        project: p.id.clone(),
                        task: t.task_id.clone(),
                    });
                }
            }
        }
        for p in &self.flat_projects {
            if p.fee.0 <= 0 {
                return Err(LedgerError::NonPositiveFee(p.id.clone()));
            }
        }
        for r in &self.recurring_items {
            if r.amount.is_zero() {
                return Err(LedgerError::ZeroAmount {
                    kind: "recurring",
                    id: r.id.clone(),
                });
            }
            if r.end_date.is_some_and(|end| end < r.anchor_date) {
                return Err(LedgerError::EndBeforeAnchor(r.id.clone()));
            }
        }
        for p in &self.planned_items {
            if p.amount.is_zero() {
                return Err(LedgerError::ZeroAmount {
                    kind: "planned",
                    id: p.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Concatenates two ledgers.
    pub fn merged(&self, other: &ProjectLedger) -> ProjectLedger {
        let mut out = self.clone();
        out.hourly_projects.extend(other.hourly_projects.iter().cloned());
        out.flat_projects.extend(other.flat_projects.iter().cloned());
        out.recurring_items.extend(other.recurring_items.iter().cloned());
        out.planned_items.extend(other.planned_items.iter().cloned());
        out
    }
}

/// Which forecasting sub-module produced a cash-flow entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Hourly,
    Nonrecurring,
    Flatrate,
    Recurring,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::Hourly,
        Source::Nonrecurring,
        Source::Flatrate,
        Source::Recurring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Hourly => "hourly",
            Source::Nonrecurring => "nonrecurring",
            Source::Flatrate => "flatrate",
            Source::Recurring => "recurring",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CashFlowEntry {
    pub date: NaiveDate,
    pub amount: Money,
    pub source: Source,
    #[serde(default)]
    pub origin_id: Option<String>,
}

/// A dated sequence of signed amounts tagged with their producing sub-module.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CashFlowSeries {
    pub entries: Vec<CashFlowEntry>,
}

impl CashFlowSeries {
    pub fn new(mut entries: Vec<CashFlowEntry>) -> CashFlowSeries {
        entries.sort_by(|a, b| {
            a.date
                .cmp(&b.date)
                .then(a.source.cmp(&b.source))
                .then_with(|| a.origin_id.cmp(&b.origin_id))
        });
        CashFlowSeries { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> Money {
        self.entries.iter().map(|e| e.amount).sum()
    }

    pub fn totals_by_date(&self) -> BTreeMap<NaiveDate, Money> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.date).or_insert(Money::ZERO) += e.amount;
        }
        out
    }

    pub fn totals_by_month(&self) -> BTreeMap<YearMonth, Money> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(YearMonth::of(e.date)).or_insert(Money::ZERO) += e.amount;
        }
        out
    }

    /// Merges several series into one, keeping the canonical ordering.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a CashFlowSeries>) -> CashFlowSeries {
        CashFlowSeries::new(
            parts
                .into_iter()
                .flat_map(|s| s.entries.iter().cloned())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn paid(delay: i64) -> Invoice {
        let due = d("2023-01-16");
        Invoice::new(
            "A1",
            "C1",
            Money(50_000),
            d("2023-01-02"),
            due,
            Some(due + chrono::Duration::days(delay)),
        )
        .unwrap()
    }

    #[test]
    fn delay_is_payment_minus_due() {
        assert_eq!(paid(4).delay_days(), Some(4));
        assert_eq!(paid(4).payment_date, Some(d("2023-01-20")));
        assert_eq!(paid(-3).delay_days(), Some(-3));
    }

    #[test]
    fn grace_boundary() {
        assert_eq!(label_invoice(&paid(8), 7).unwrap(), Label::Delayed);
        assert_eq!(label_invoice(&paid(7), 7).unwrap(), Label::OnTime);
        assert_eq!(label_invoice(&paid(-3), 7).unwrap(), Label::OnTime);
        assert_eq!(label_invoice(&paid(1), 0).unwrap(), Label::Delayed);
    }

    #[test]
    fn unpaid_is_unlabelable() {
        let inv = Invoice::new("X", "C", Money(1), d("2023-01-01"), d("2023-01-01"), None).unwrap();
        assert_eq!(
            label_invoice(&inv, 7),
            Err(LabelError::Unlabelable("X".into()))
        );
    }

    #[test]
    fn invariants_enforced() {
        let bad = Invoice::new("A", "C", Money(5), d("2023-01-02"), d("2023-01-01"), None);
        assert!(matches!(bad, Err(InvoiceError::DueBeforeIssue { .. })));
        let zero = Invoice::new("A", "C", Money(0), d("2023-01-02"), d("2023-01-02"), None);
        assert_eq!(zero, Err(InvoiceError::ZeroAmount));
        let early = Invoice::new(
            "A",
            "C",
            Money(5),
            d("2023-01-02"),
            d("2023-01-03"),
            Some(d("2023-01-01")),
        );
        assert!(matches!(early, Err(InvoiceError::PaidBeforeIssue { .. })));
    }

    #[test]
    fn json_deserialization_validates() {
        let ok = r#"{"invoice_id":"A","customer_id":"C","amount":5,"issue_date":"2023-01-02","due_date":"2023-01-05","payment_date":null}"#;
        let inv: Invoice = serde_json::from_str(ok).unwrap();
        assert_eq!(inv.id, "A");
        let bad = ok.replace("2023-01-05", "2023-01-01");
        assert!(serde_json::from_str::<Invoice>(&bad).is_err());
    }

    #[test]
    fn history_tie_break_by_id() {
        let a = Invoice::new("b", "C", Money(1), d("2023-01-02"), d("2023-01-02"), None).unwrap();
        let b = Invoice::new("a", "C", Money(1), d("2023-01-02"), d("2023-01-02"), None).unwrap();
        let c = Invoice::new("z", "C", Money(1), d("2023-01-01"), d("2023-01-02"), None).unwrap();
        let h = CustomerHistory::new("C", vec![a, b, c]);
        let ids: Vec<_> = h.invoices().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["z", "a", "b"]);
    }

    #[test]
    fn year_month_arithmetic() {
        let jan = YearMonth::new(2024, 1).unwrap();
        assert_eq!(jan.pred().to_string(), "2023-12");
        assert_eq!(jan.add_months(13).to_string(), "2025-02");
        assert_eq!(jan.succ().day_clamped(31), d("2024-02-29"));
        assert_eq!("2024-03".parse::<YearMonth>().unwrap().days(), 31);
        assert!("2024-13".parse::<YearMonth>().is_err());
    }

    #[test]
    fn money_rounds_half_even() {
        assert_eq!(Money::from_f64_rounded(2.5), Money(2));
        assert_eq!(Money::from_f64_rounded(3.5), Money(4));
        assert_eq!(Money::from_f64_rounded(-2.5), Money(-2));
    }
}
