use chrono::{Datelike, Duration, NaiveDate};

use crate::types::{CashFlowEntry, CashFlowSeries, DateRange, Period, RecurringItem, Source, YearMonth};

/// Schedule dates of `item` falling inside `range` (and not after its end date).
///
/// Monthly schedules keep the anchor's day of month, clamped to shorter months.
pub fn ticks(item: &RecurringItem, range: &DateRange) -> Vec<NaiveDate> {
    let last = match item.end_date {
        Some(end) => end.min(range.end_date),
        None => range.end_date,
    };
    let mut out = Vec::new();
    if last < range.start_date || last < item.anchor_date {
        return out;
    }
    match item.period {
        Period::Weekly => {
            let gap = (range.start_date - item.anchor_date).num_days();
            let k0 = if gap > 0 { (gap + 6) / 7 } else { 0 };
            let mut date = item.anchor_date + Duration::days(7 * k0);
            while date <= last {
                out.push(date);
                date += Duration::days(7);
            }
        }
        Period::Monthly => {
            let anchor_month = YearMonth::of(item.anchor_date);
            let day = item.anchor_date.day();
            let k0 = anchor_month
                .months_until(YearMonth::of(range.start_date))
                .max(0);
            let mut k = k0;
            loop {
                let date = anchor_month.add_months(k).day_clamped(day);
                if date > last {
                    break;
                }
                if date >= range.start_date {
                    out.push(date);
                }
                k += 1;
            }
        }
    }
    out
}

pub fn forecast_recurring(items: &[RecurringItem], horizon: &DateRange) -> CashFlowSeries {
    CashFlowSeries::new(
        items
            .iter()
            .flat_map(|item| {
                ticks(item, horizon).into_iter().map(|date| CashFlowEntry {
                    date,
                    amount: item.amount,
                    source: Source::Recurring,
                    origin_id: Some(item.id.clone()),
                })
            })
            .collect(),
    )
}
