use crate::types::{CashFlowEntry, CashFlowSeries, DateRange, FlatRateProject, Source};

/// Each fee is paid on its project's completion date; projects completing
/// outside the horizon contribute nothing.
pub fn forecast_flatrate(projects: &[FlatRateProject], horizon: &DateRange) -> CashFlowSeries {
    CashFlowSeries::new(
        projects
            .iter()
            .filter(|p| horizon.contains(p.completion_date))
            .map(|p| CashFlowEntry {
                date: p.completion_date,
                amount: p.fee,
                source: Source::Flatrate,
                origin_id: Some(p.id.clone()),
            })
            .collect(),
    )
}
