//! Invoice ingestion from CSV and JSON with row-indexed diagnostics.
//!
//! A bad row never aborts a batch: it is reported in [`IngestReport::errors`]
//! and the remaining rows are still accepted.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Invoice, Money};

/// Exact CSV header of the invoice schema.
pub const CSV_HEADER: [&str; 6] = [
    "invoice_id",
    "customer_id",
    "amount",
    "issue_date",
    "due_date",
    "payment_date",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// Zero-based data row index (the header is not counted).
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub invoices: Vec<Invoice>,
    pub errors: Vec<RowError>,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?} in header")]
    MissingColumn(&'static str),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Loosely typed row as it arrives from CSV or JSON.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RawRow {
    #[serde(default)]
    pub invoice_id: Option<String>,
    #[serde(default)]
    pub customer_id: Option<String>,
    #[serde(default)]
    pub amount: Option<serde_json::Value>,
    #[serde(default)]
    pub issue_date: Option<String>,
    #[serde(default)]
    pub due_date: Option<String>,
    #[serde(default)]
    pub payment_date: Option<String>,
}

fn parse_date(field: &str, value: Option<&str>) -> Result<NaiveDate, String> {
    let value = value
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| format!("{field}: missing"))?;
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| format!("{field}: malformed date {value:?}"))
}

fn parse_amount(value: Option<&serde_json::Value>) -> Result<Money, String> {
    let parsed = match value {
        Some(serde_json::Value::Number(n)) => n.as_i64(),
        Some(serde_json::Value::String(s)) => s.trim().parse::<i64>().ok(),
        _ => return Err("amount: missing".into()),
    };
    parsed
        .map(Money)
        .ok_or_else(|| format!("amount: not an integer number of minor units: {value:?}", value = value.unwrap()))
}

impl RawRow {
    pub fn validate(&self) -> Result<Invoice, String> {
        let id = self.invoice_id.clone().unwrap_or_default();
        let cust = self.customer_id.clone().unwrap_or_default();
        let amount = parse_amount(self.amount.as_ref())?;
        let issue = parse_date("issue_date", self.issue_date.as_deref())?;
        let due = parse_date("due_date", self.due_date.as_deref())?;
        let paid = match self.payment_date.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(v) => Some(parse_date("payment_date", Some(v))?),
        };
        Invoice::new(id.trim(), cust.trim(), amount, issue, due, paid).map_err(|e| e.to_string())
    }
}

fn collect(rows: impl IntoIterator<Item = (usize, Result<Invoice, String>)>) -> IngestReport {
    let mut report = IngestReport::default();
    for (row, res) in rows {
        match res {
            Ok(inv) => report.invoices.push(inv),
            Err(message) => report.errors.push(RowError { row, message }),
        }
    }
    report
}

/// Reads invoices from CSV with the [`CSV_HEADER`] columns (any order).
pub fn ingest_csv<R: Read>(reader: R) -> Result<IngestReport, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(IngestReport::default());
    }
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::MissingColumn(name))?;
    }
    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let res = match record {
            Ok(rec) => {
                let get = |i: usize| rec.get(cols[i]).map(str::to_owned);
                RawRow {
                    invoice_id: get(0),
                    customer_id: get(1),
                    amount: get(2).map(serde_json::Value::String),
                    issue_date: get(3),
                    due_date: get(4),
                    payment_date: get(5),
                }
                .validate()
            }
            Err(e) => Err(e.to_string()),
        };
        rows.push((idx, res));
    }
    Ok(collect(rows))
}

pub fn ingest_csv_str(data: &str) -> Result<IngestReport, IngestError> {
    ingest_csv(data.as_bytes())
}

/// Validates JSON invoice objects one by one.
pub fn ingest_json_rows(rows: &[serde_json::Value]) -> IngestReport {
    collect(rows.iter().enumerate().map(|(idx, value)| {
        let res = serde_json::from_value::<RawRow>(value.clone())
            .map_err(|e| format!("schema: {e}"))
            .and_then(|raw| raw.validate());
        (idx, res)
    }))
}

/// Writes invoices in the canonical CSV schema.
pub fn write_csv<W: Write>(invoices: &[Invoice], writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for inv in invoices {
        w.write_record([
            inv.id.as_str(),
            inv.customer_id.as_str(),
            &inv.amount.0.to_string(),
            &inv.issue_date.to_string(),
            &inv.due_date.to_string(),
            &inv.payment_date.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(invoices: &[Invoice]) -> String {
    let mut buf = Vec::new();
    write_csv(invoices, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Reads the IBM "Late Payment Histories" accounts-receivable export.
///
/// Uses `customerID`, `invoiceNumber`, `InvoiceDate`, `DueDate`,
/// `InvoiceAmount` and `SettledDate`; dates are `M/D/YYYY`, amounts are
/// converted to minor units.
pub fn ingest_ibm_late_payment<R: Read>(reader: R) -> Result<IngestReport, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::MissingColumn(name))
    };
    let (cust, num, issue, due, amount, settled) = (
        col("customerID")?,
        col("invoiceNumber")?,
        col("InvoiceDate")?,
        col("DueDate")?,
        col("InvoiceAmount")?,
        col("SettledDate")?,
    );
    let us_date = |field: &str, s: Option<&str>| -> Result<NaiveDate, String> {
        let s = s.unwrap_or("");
        NaiveDate::parse_from_str(s, "%m/%d/%Y")
            .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
            .map_err(|_| format!("{field}: malformed date {s:?}"))
    };
    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let res = record.map_err(|e| e.to_string()).and_then(|rec| {
            let amount: f64 = rec
                .get(amount)
                .and_then(|a| a.parse().ok())
                .ok_or_else(|| "InvoiceAmount: not a number".to_string())?;
            let settled = match rec.get(settled).map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(us_date("SettledDate", Some(s))?),
            };
            Invoice::new(
                rec.get(num).unwrap_or(""),
                rec.get(cust).unwrap_or(""),
                Money::from_f64_rounded(amount * 100.0),
                us_date("InvoiceDate", rec.get(issue))?,
                us_date("DueDate", rec.get(due))?,
                settled,
            )
            .map_err(|e| e.to_string())
        });
        rows.push((idx, res));
    }
    Ok(collect(rows))
}
