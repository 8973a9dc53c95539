//! Working-day calendar.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::types::DateRange;

/// Rule deciding which dates are working days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calendar {
    /// Monday through Friday, no holidays.
    #[default]
    MondayToFriday,
}

impl Calendar {
    pub fn is_working_day(self, date: NaiveDate) -> bool {
        match self {
            Calendar::MondayToFriday => !matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
        }
    }

    pub fn working_days(self, range: &DateRange) -> impl Iterator<Item = NaiveDate> + '_ {
        range.days().filter(move |d| self.is_working_day(*d))
    }

    pub fn count_working_days(self, range: &DateRange) -> usize {
        self.working_days(range).count()
    }
}
