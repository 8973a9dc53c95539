use serde::{Deserialize, Serialize};

use crate::classifier::{predict_invoices, DelayPrediction, TrainedModel};
use crate::types::{CashFlowEntry, CashFlowSeries, DateRange, Invoice, Label, Source};

/// Open invoices placed on their expected payment dates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArIntegration {
    pub series: CashFlowSeries,
    /// Invoices predicted to be paid late, including those whose shifted
    /// date falls beyond the horizon.
    pub at_risk: Vec<DelayPrediction>,
    /// Set when the model is a constant predictor and was not used.
    pub degenerate_model: bool,
}

fn entry(inv: &Invoice, date: chrono::NaiveDate) -> CashFlowEntry {
    CashFlowEntry {
        date,
        amount: inv.amount,
        source: Source::Nonrecurring,
        origin_id: Some(inv.id.clone()),
    }
}

/// Books every open invoice on its due date.
pub fn place_at_due_dates(open_invoices: &[Invoice], horizon: &DateRange) -> CashFlowSeries {
    CashFlowSeries::new(
        open_invoices
            .iter()
            .filter(|inv| horizon.contains(inv.due_date))
            .map(|inv| entry(inv, inv.due_date))
            .collect(),
    )
}

/// Shifts open invoices predicted to be delayed by their expected delay.
///
/// `history` supplies the customers' past invoices for feature building.
pub fn integrate_ar(
    open_invoices: &[Invoice],
    history: &[Invoice],
    model: &TrainedModel,
    horizon: &DateRange,
    grace_days: u32,
) -> ArIntegration {
    if model.is_degenerate() {
        return ArIntegration {
            series: place_at_due_dates(open_invoices, horizon),
            at_risk: Vec::new(),
            degenerate_model: true,
        };
    }
    let predictions = predict_invoices(model, history, open_invoices, grace_days);
    let mut entries = Vec::new();
    let mut at_risk = Vec::new();
    for (inv, pred) in open_invoices.iter().zip(predictions) {
        let date = match pred.label {
            Label::Delayed => pred.expected_payment_date,
            Label::OnTime => inv.due_date,
        };
        if horizon.contains(date) {
            entries.push(entry(inv, date));
        }
        if pred.label == Label::Delayed {
            at_risk.push(pred);
        }
    }
    ArIntegration {
        series: CashFlowSeries::new(entries),
        at_risk,
        degenerate_model: false,
    }
}
