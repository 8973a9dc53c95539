use crate::calendar::Calendar;
use crate::types::{CashFlowEntry, CashFlowSeries, DateRange, Money, ProjectLedger, Source};

use super::CashFlowError;

/// Daily hourly-work income rate: the value of all work sessions logged in
/// `history_window`, spread over that window's working days.
///
/// Returns `Ok(None)` when the ledger has no hourly tasks at all.
pub fn daily_rate(
    ledger: &ProjectLedger,
    history_window: &DateRange,
    calendar: Calendar,
) -> Result<Option<f64>, CashFlowError> {
    let has_tasks = ledger.hourly_projects.iter().any(|p| !p.tasks.is_empty());
    if !has_tasks {
        return Ok(None);
    }
    let working_days = calendar.count_working_days(history_window);
    if working_days == 0 {
        return Err(CashFlowError::EmptyWorkingHistory);
    }
    let earned: f64 = ledger
        .hourly_projects
        .iter()
        .flat_map(|p| &p.tasks)
        .filter(|t| history_window.contains(t.session_date))
        .map(|t| t.hours * t.wage.as_f64())
        .sum();
    Ok(Some(earned / working_days as f64))
}

/// One entry of the daily rate per working day of the horizon.
pub fn forecast_hourly(
    ledger: &ProjectLedger,
    history_window: &DateRange,
    horizon: &DateRange,
    calendar: Calendar,
) -> Result<CashFlowSeries, CashFlowError> {
    let Some(rate) = daily_rate(ledger, history_window, calendar)? else {
        return Ok(CashFlowSeries::default());
    };
    let amount = Money::from_f64_rounded(rate);
    if amount.is_zero() {
        return Ok(CashFlowSeries::default());
    }
    Ok(CashFlowSeries::new(
        calendar
            .working_days(horizon)
            .map(|date| CashFlowEntry {
                date,
                amount,
                source: Source::Hourly,
                origin_id: None,
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{HourlyProject, Task};
    use chrono::NaiveDate;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn task(hours: f64, wage: i64, date: &str) -> Task {
        Task {
            task_id: format!("t-{hours}-{wage}"),
            hours,
            wage: Money(wage),
            session_date: d(date),
        }
    }

    fn ledger(tasks: Vec<Task>) -> ProjectLedger {
        ProjectLedger {
            hourly_projects: vec![HourlyProject { id: "p".into(), tasks }],
            ..Default::default()
        }
    }

    // 2023-01-02 (Mon) .. 2023-01-27 (Fri) spans exactly 20 working days.
    fn window20() -> DateRange {
        DateRange::new(d("2023-01-02"), d("2023-01-27"))
    }

    #[test]
    fn single_task_rate() {
        let l = ledger(vec![task(40.0, 50, "2023-01-10")]);
        assert_eq!(Calendar::MondayToFriday.count_working_days(&window20()), 20);
        let rate = daily_rate(&l, &window20(), Calendar::MondayToFriday).unwrap();
        assert_eq!(rate, Some(100.0));
        // March 2023 has 23 working days; 2023-03-01..2023-03-29 has 21.
        let horizon = DateRange::new(d("2023-03-01"), d("2023-03-29"));
        let s = forecast_hourly(&l, &window20(), &horizon, Calendar::MondayToFriday).unwrap();
        assert_eq!(s.len(), 21);
        assert_eq!(s.total(), Money(2100));
    }

    #[test]
    fn two_tasks_rate() {
        // 2023-01-02 .. 2023-01-13: ten working days
        let window = DateRange::new(d("2023-01-02"), d("2023-01-13"));
        let l = ledger(vec![task(10.0, 30, "2023-01-03"), task(10.0, 60, "2023-01-04")]);
        assert_eq!(daily_rate(&l, &window, Calendar::MondayToFriday).unwrap(), Some(90.0));
    }

    #[test]
    fn sessions_outside_window_ignored() {
        let l = ledger(vec![task(40.0, 50, "2023-01-10"), task(99.0, 50, "2023-02-10")]);
        assert_eq!(daily_rate(&l, &window20(), Calendar::MondayToFriday).unwrap(), Some(100.0));
    }

    #[test]
    fn no_projects_is_empty() {
        let s = forecast_hourly(&ProjectLedger::default(), &window20(), &window20(), Calendar::MondayToFriday).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn weekend_only_window_is_an_error() {
        let l = ledger(vec![task(1.0, 1, "2023-01-07")]);
        let weekend = DateRange::new(d("2023-01-07"), d("2023-01-08"));
        assert_eq!(
            forecast_hourly(&l, &weekend, &window20(), Calendar::MondayToFriday),
            Err(CashFlowError::EmptyWorkingHistory)
        );
    }
}
