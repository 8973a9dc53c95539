//! Per-invoice cooperation features, including the fast/slow moving averages
//! of a customer's payment delays.
//!
//! Every history-derived value is computed as of the target invoice's issue
//! date: only invoices issued strictly before it are considered, and such an
//! invoice counts as paid only if its payment had arrived by that date.
//! Invoices issued earlier but still unpaid at that point are outstanding.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::types::{CustomerHistory, Invoice, Label, Money, DEFAULT_GRACE_DAYS};

/// Floor of the slow moving average, in days.
pub const SMA_FLOOR_DAYS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub amount: f64,
    pub payment_term_days: f64,
    pub late_ratio: f64,
    pub avg_delay_days: f64,
    pub outstanding_count: u32,
    pub paid_amount_total: Money,
    pub late_amount_total: Money,
    pub fma: f64,
    pub sma: f64,
    pub ma_ratio: f64,
    pub ma_gradient: f64,
}

/// Which columns of a [`FeatureVector`] a model consumes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// All eleven features.
    #[default]
    Full,
    /// Without the moving-average trend features (`fma`, `sma`, `ma_ratio`,
    /// `ma_gradient`).
    Base,
}

impl FeatureSet {
    pub fn names(self) -> &'static [&'static str] {
        const FULL: [&str; 11] = [
            "amount",
            "payment_term_days",
            "late_ratio",
            "avg_delay_days",
            "outstanding_count",
            "paid_amount_total",
            "late_amount_total",
            "fma",
            "sma",
            "ma_ratio",
            "ma_gradient",
        ];
        match self {
            FeatureSet::Full => &FULL,
            FeatureSet::Base => &FULL[..7],
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }
}

impl FeatureVector {
    pub fn values(&self, set: FeatureSet) -> Vec<f64> {
        let mut v = vec![
            self.amount,
            self.payment_term_days,
            self.late_ratio,
            self.avg_delay_days,
            f64::from(self.outstanding_count),
            self.paid_amount_total.as_f64(),
            self.late_amount_total.as_f64(),
        ];
        if set == FeatureSet::Full {
            v.extend([self.fma, self.sma, self.ma_ratio, self.ma_gradient]);
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.values(FeatureSet::Full).iter().all(|x| x.is_finite())
    }
}

/// FMA over delays of paid invoices in invoice order: mean of the last two,
/// or 0 with fewer than two.
pub fn fma_from_delays(delays: &[i64]) -> f64 {
    match delays {
        [.., prev, last] => (*prev + *last) as f64 / 2.0,
        _ => 0.0,
    }
}

/// SMA over delays of paid invoices: mean of the last four floored at 7,
/// or 7 with fewer than four.
pub fn sma_from_delays(delays: &[i64]) -> f64 {
    if delays.len() < 4 {
        return SMA_FLOOR_DAYS;
    }
    let tail = &delays[delays.len() - 4..];
    let mean = tail.iter().sum::<i64>() as f64 / 4.0;
    mean.max(SMA_FLOOR_DAYS)
}

fn known_paid_delays(history: &CustomerHistory, as_of: NaiveDate) -> Vec<i64> {
    history
        .invoices()
        .iter()
        .filter(|inv| inv.issue_date < as_of && inv.is_paid_by(as_of))
        .filter_map(Invoice::delay_days)
        .collect()
}

/// Delays of the paid invoices visible when invoice `n` was issued.
///
/// Returns an empty list if `n` is out of range.
pub fn prior_paid_delays(history: &CustomerHistory, n: usize) -> Vec<i64> {
    history
        .invoices()
        .get(n)
        .map(|target| known_paid_delays(history, target.issue_date))
        .unwrap_or_default()
}

pub fn compute_fma(history: &CustomerHistory, n: usize) -> f64 {
    fma_from_delays(&prior_paid_delays(history, n))
}

pub fn compute_sma(history: &CustomerHistory, n: usize) -> f64 {
    sma_from_delays(&prior_paid_delays(history, n))
}

/// Builds the feature vector of `target` using the 7-day grace rule.
pub fn build_features(history: &CustomerHistory, target: &Invoice) -> FeatureVector {
    build_features_with_grace(history, target, DEFAULT_GRACE_DAYS)
}

pub fn build_features_with_grace(
    history: &CustomerHistory,
    target: &Invoice,
    grace_days: u32,
) -> FeatureVector {
    let as_of = target.issue_date;
    let prior: Vec<&Invoice> = history
        .invoices()
        .iter()
        .filter(|inv| inv.issue_date < as_of && inv.id != target.id)
        .collect();

    let mut paid_count = 0usize;
    let mut late_count = 0usize;
    let mut delay_sum = 0i64;
    let mut outstanding = 0u32;
    let mut paid_total = Money::ZERO;
    let mut late_total = Money::ZERO;
    let mut delays = Vec::new();
    for inv in &prior {
        match inv.delay_days().filter(|_| inv.is_paid_by(as_of)) {
            Some(delay) => {
                paid_count += 1;
                delay_sum += delay;
                paid_total += inv.amount;
                delays.push(delay);
                if Label::from_delay(delay, grace_days) == Label::Delayed {
                    late_count += 1;
                    late_total += inv.amount;
                }
            }
            None => outstanding += 1,
        }
    }

    let fma = fma_from_delays(&delays);
    let sma = sma_from_delays(&delays);
    let ma_gradient = prior
        .last()
        .map(|prev| fma - fma_from_delays(&known_paid_delays(history, prev.issue_date)))
        .unwrap_or(0.0);
    let (late_ratio, avg_delay_days) = if paid_count == 0 {
        (0.0, 0.0)
    } else {
        (
            late_count as f64 / paid_count as f64,
            delay_sum as f64 / paid_count as f64,
        )
    };

    FeatureVector {
        amount: target.amount.as_f64(),
        payment_term_days: target.payment_term_days() as f64,
        late_ratio,
        avg_delay_days,
        outstanding_count: outstanding,
        paid_amount_total: paid_total,
        late_amount_total: late_total,
        fma,
        sma,
        ma_ratio: fma / sma,
        ma_gradient,
    }
}
