use chrono::NaiveDate;

use crate::types::{CashFlowEntry, CashFlowSeries, DateRange, Invoice, Money, PlannedItem, Source, YearMonth};

/// Months of history averaged into the baseline monthly income.
pub const LOOKBACK_MONTHS: i32 = 6;

/// Day of month on which the monthly value is booked.
pub const BOOKING_DAY: u32 = 15;

/// Mean monthly net of paid non-recurring invoices over the calendar months
/// preceding `horizon_start` (at most six).
///
/// Months without activity count as zero. When less history exists the mean
/// is taken over the months actually covered, starting from `history_start`
/// (or from the first payment if `None`), and never over fewer than one.
pub fn mean_monthly_income(
    history: &[Invoice],
    horizon_start: NaiveDate,
    history_start: Option<NaiveDate>,
) -> f64 {
    let first_horizon_month = YearMonth::of(horizon_start);
    let lookback_start = first_horizon_month.add_months(-LOOKBACK_MONTHS);
    let in_scope = |paid: NaiveDate| {
        paid < horizon_start
            && YearMonth::of(paid) >= lookback_start
            && history_start.is_none_or(|s| paid >= s)
    };
    let paid: Vec<(NaiveDate, Money)> = history
        .iter()
        .filter_map(|inv| inv.payment_date.map(|p| (p, inv.amount)))
        .filter(|(p, _)| in_scope(*p))
        .collect();

    let earliest = match history_start {
        Some(s) => Some(YearMonth::of(s)),
        None => paid.iter().map(|(p, _)| YearMonth::of(*p)).min(),
    };
    let Some(earliest) = earliest else {
        return 0.0;
    };
    let months = earliest
        .max(lookback_start)
        .months_until(first_horizon_month)
        .clamp(1, LOOKBACK_MONTHS);
    let total: i64 = paid.iter().map(|(_, m)| m.0).sum();
    total as f64 / f64::from(months)
}

/// The conservative monthly rule: when both the historical mean `i` and the
/// planned amount `i_k` are positive take the larger, otherwise add them.
pub fn monthly_value(mean_income: f64, planned: f64) -> f64 {
    if mean_income > 0.0 && planned > 0.0 {
        mean_income.max(planned)
    } else {
        mean_income + planned
    }
}

/// One entry per horizon month, booked on the 15th. Months whose 15th falls
/// outside the horizon are skipped.
pub fn forecast_nonrecurring(
    history: &[Invoice],
    planned: &[PlannedItem],
    horizon: &DateRange,
    history_start: Option<NaiveDate>,
) -> CashFlowSeries {
    if horizon.is_empty() {
        return CashFlowSeries::default();
    }
    let mean = mean_monthly_income(history, horizon.start_date, history_start);
    let mut entries = Vec::new();
    for month in horizon.months() {
        let date = month.day_clamped(BOOKING_DAY);
        if !horizon.contains(date) {
            continue;
        }
        let planned_k: i64 = planned
            .iter()
            .filter(|p| p.month == month)
            .map(|p| p.amount.0)
            .sum();
        let amount = Money::from_f64_rounded(monthly_value(mean, planned_k as f64));
        if !amount.is_zero() {
            entries.push(CashFlowEntry {
                date,
                amount,
                source: Source::Nonrecurring,
                origin_id: None,
            });
        }
    }
    CashFlowSeries::new(entries)
}
