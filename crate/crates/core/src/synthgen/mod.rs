//! Seeded synthetic freelancer data: work sessions on concurrent hourly
//! projects with drifting wages, flat-rate engagements, recurring items, and
//! customers whose invoices are paid with configurable delay behaviour.
//!
//! Each user draws from its own ChaCha stream keyed by `(seed, user index)`,
//! so users are generated in parallel and the output is byte-for-byte
//! reproducible.

mod trending;

use std::fs;
use std::io;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};
use thiserror::Error;

use crate::calendar::Calendar;
use crate::ingest;
use crate::types::{
    FlatRateProject, HourlyProject, Invoice, Money, Period, ProjectLedger, RecurringItem, Task,
    DEFAULT_GRACE_DAYS,
};

pub use trending::{
    generate_trending_customers, trending_dataset, TrendingCustomers, DELAY_FLOOR_DAYS,
};

/// Shortest generated work session, in hours.
pub const MIN_SESSION_HOURS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WageConfig {
    /// Hourly wage in minor units.
    pub mean: f64,
    pub std: f64,
    /// Multiplicative change per month, in percent.
    pub monthly_drift_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    /// Probability that a (non-trending) invoice is paid after the grace period.
    pub p_late: f64,
    /// Success probability of the geometric tail of late payments.
    pub tail_p: f64,
    /// Share of customers whose delays trend over time.
    pub trend_fraction: f64,
    /// Magnitude of the trend, days per invoice.
    pub trend_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_users: usize,
    pub start_date: NaiveDate,
    pub span_days: u32,
    pub sessions_per_week: IntRange,
    pub hours_per_session: MeanStd,
    pub wage: WageConfig,
    pub concurrent_projects: IntRange,
    pub flat_projects: IntRange,
    /// Flat-rate fee in minor units.
    pub flat_fee: MeanStd,
    pub customers: IntRange,
    pub invoices_per_month: f64,
    /// Invoice amount in minor units.
    pub invoice_amount: MeanStd,
    pub invoice_terms_days: u32,
    /// Invoicing starts this many days before `start_date`, so customer
    /// relationships are already running when the data begins.
    pub invoice_lead_days: u32,
    pub delay: DelayProfile,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_users: 1000,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
            span_days: 365,
            sessions_per_week: IntRange { min: 5, max: 11 },
            hours_per_session: MeanStd { mean: 3.5, std: 1.5 },
            wage: WageConfig {
                mean: 5000.0,
                std: 1000.0,
                monthly_drift_pct: 0.5,
            },
            concurrent_projects: IntRange { min: 1, max: 3 },
            flat_projects: IntRange { min: 1, max: 3 },
            flat_fee: MeanStd {
                mean: 200_000.0,
                std: 80_000.0,
            },
            customers: IntRange { min: 3, max: 10 },
            invoices_per_month: 1.5,
            invoice_amount: MeanStd {
                mean: 60_000.0,
                std: 25_000.0,
            },
            invoice_terms_days: 14,
            invoice_lead_days: 60,
            delay: DelayProfile {
                p_late: 0.3,
                tail_p: 0.15,
                trend_fraction: 0.2,
                trend_slope: 2.0,
            },
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// Users without wage drift or trending customers.
    pub fn stationary() -> Self {
        let mut cfg = GeneratorConfig::default();
        cfg.wage.monthly_drift_pct = 0.0;
        cfg.delay.trend_fraction = 0.0;
        cfg
    }

    pub fn with_users(mut self, n: usize) -> Self {
        self.n_users = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Duration::days(i64::from(self.span_days) - 1)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::InvalidConfig(what.to_owned()));
        let ranges = [
            ("sessions_per_week", self.sessions_per_week),
            ("concurrent_projects", self.concurrent_projects),
            ("flat_projects", self.flat_projects),
            ("customers", self.customers),
        ];
        for (name, r) in ranges {
            if r.min > r.max {
                return bad(&format!("{name}: min exceeds max"));
            }
        }
        if self.concurrent_projects.min == 0 || self.customers.min == 0 {
            return bad("concurrent_projects and customers need min >= 1");
        }
        if self.span_days == 0 {
            return bad("span_days must be positive");
        }
        if !(self.hours_per_session.mean > MIN_SESSION_HOURS && self.hours_per_session.std > 0.0) {
            return bad("hours_per_session: mean must exceed 0.5 h and std be positive");
        }
        for (name, ms) in [
            ("wage", MeanStd { mean: self.wage.mean, std: self.wage.std }),
            ("flat_fee", self.flat_fee),
            ("invoice_amount", self.invoice_amount),
        ] {
            if !(ms.mean > 0.0 && ms.std > 0.0) {
                return bad(&format!("{name}: mean and std must be positive"));
            }
        }
        if !(self.wage.monthly_drift_pct > -100.0 && self.wage.monthly_drift_pct.is_finite()) {
            return bad("wage drift must exceed -100%");
        }
        if !(self.invoices_per_month > 0.0 && self.invoices_per_month.is_finite()) {
            return bad("invoices_per_month must be positive");
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.delay.p_late) || !unit(self.delay.trend_fraction) {
            return bad("delay probabilities must lie in [0, 1]");
        }
        if !(self.delay.tail_p > 0.0 && self.delay.tail_p <= 1.0) {
            return bad("delay tail_p must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ingest: {0}")]
    Ingest(#[from] ingest::IngestError),
    #[error("dataset file {file} has invalid rows: {detail}")]
    InvalidRows { file: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUser {
    pub user_id: String,
    pub ledger: ProjectLedger,
    pub invoices: Vec<Invoice>,
}

impl SyntheticUser {
    pub fn session_count(&self) -> usize {
        self.ledger.hourly_projects.iter().map(|p| p.tasks.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub users: usize,
    pub sessions: usize,
    pub invoices: usize,
    pub customers: usize,
    pub flat_projects: usize,
    pub recurring_items: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: String,
    pub counts: DatasetCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub config: GeneratorConfig,
    pub users: Vec<SyntheticUser>,
    pub manifest: Manifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON encoding of the users.
pub fn dataset_hash(users: &[SyntheticUser]) -> String {
    sha256_hex(&serde_json::to_vec(users).expect("users serialize"))
}

fn manifest_for(config: &GeneratorConfig, users: &[SyntheticUser]) -> Manifest {
    let customers: usize = users
        .iter()
        .map(|u| {
            let mut ids: Vec<&str> = u.invoices.iter().map(|i| i.customer_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            ids.len()
        })
        .sum();
    Manifest {
        seed: config.seed,
        config_hash: config.hash(),
        dataset_hash: dataset_hash(users),
        counts: DatasetCounts {
            users: users.len(),
            sessions: users.iter().map(SyntheticUser::session_count).sum(),
            invoices: users.iter().map(|u| u.invoices.len()).sum(),
            customers,
            flat_projects: users.iter().map(|u| u.ledger.flat_projects.len()).sum(),
            recurring_items: users.iter().map(|u| u.ledger.recurring_items.len()).sum(),
        },
    }
}

/// Generates the dataset described by `config`.
pub fn generate(config: &GeneratorConfig) -> Result<SyntheticDataset, GenError> {
    config.validate()?;
    let hours = TruncatedNormal::with_mean(
        config.hours_per_session.mean,
        config.hours_per_session.std,
        MIN_SESSION_HOURS,
    );
    let users: Vec<SyntheticUser> = (0..config.n_users)
        .into_par_iter()
        .map(|idx| generate_user(config, &hours, idx))
        .collect();
    let manifest = manifest_for(config, &users);
    Ok(SyntheticDataset {
        config: config.clone(),
        users,
        manifest,
    })
}

pub(crate) fn user_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn lognormal(ms: MeanStd) -> LogNormal<f64> {
    let sigma2 = (1.0 + (ms.std / ms.mean).powi(2)).ln();
    LogNormal::new(ms.mean.ln() - sigma2 / 2.0, sigma2.sqrt()).expect("valid lognormal")
}

fn uniform_in(rng: &mut ChaCha8Rng, r: IntRange) -> u32 {
    rng.random_range(r.min..=r.max)
}

/// Normal distribution truncated below at `lower`, parameterized so that the
/// truncated distribution has the requested mean.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNormal {
    inner: Normal<f64>,
    lower: f64,
}

impl TruncatedNormal {
    pub fn with_mean(mean: f64, std: f64, lower: f64) -> TruncatedNormal {
        let std_normal = StdNormal::standard();
        let truncated_mean = |mu: f64| {
            let alpha = (lower - mu) / std;
            mu + std * std_normal.pdf(alpha) / (1.0 - std_normal.cdf(alpha))
        };
        // truncated_mean is increasing in mu
        let (mut lo, mut hi) = (lower - 10.0 * std, mean);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if truncated_mean(mid) < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        TruncatedNormal {
            inner: Normal::new(0.5 * (lo + hi), std).expect("valid normal"),
            lower,
        }
    }

    pub fn location(&self) -> f64 {
        self.inner.mean()
    }
}

impl Distribution<f64> for TruncatedNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.inner.sample(rng);
            if x >= self.lower {
                return x;
            }
        }
    }
}

/// Delay of a stationary customer: on time (0..=grace days) or late with a
/// geometric tail beyond the grace period.
fn stationary_delay(rng: &mut ChaCha8Rng, profile: &DelayProfile) -> i64 {
    let grace = i64::from(DEFAULT_GRACE_DAYS);
    if rng.random_bool(profile.p_late) {
        let mut extra = 0;
        while !rng.random_bool(profile.tail_p) && extra < 365 {
            extra += 1;
        }
        grace + 1 + extra
    } else {
        rng.random_range(0..=grace)
    }
}

fn generate_user(config: &GeneratorConfig, hours: &TruncatedNormal, idx: usize) -> SyntheticUser {
    let mut rng = user_rng(config.seed, idx as u64);
    let user_id = format!("u{idx:05}");
    let start = config.start_date;
    let end = config.end_date();
    let calendar = Calendar::MondayToFriday;

    // hourly projects and sessions
    let wage_dist = lognormal(MeanStd {
        mean: config.wage.mean,
        std: config.wage.std,
    });
    let n_projects = uniform_in(&mut rng, config.concurrent_projects) as usize;
    let base_wages: Vec<f64> = (0..n_projects).map(|_| wage_dist.sample(&mut rng)).collect();
    let mut projects: Vec<HourlyProject> = (0..n_projects)
        .map(|k| HourlyProject {
            id: format!("{user_id}-h{k}"),
            tasks: Vec::new(),
        })
        .collect();
    let drift = 1.0 + config.wage.monthly_drift_pct / 100.0;
    let weeks = config.span_days.div_ceil(7);
    for week in 0..weeks {
        let week_start = start + Duration::days(7 * i64::from(week));
        let days: Vec<NaiveDate> = (0..7)
            .map(|o| week_start + Duration::days(o))
            .filter(|d| *d <= end && calendar.is_working_day(*d))
            .collect();
        let count = uniform_in(&mut rng, config.sessions_per_week);
        if days.is_empty() {
            continue;
        }
        for _ in 0..count {
            let date = days[rng.random_range(0..days.len())];
            let p = rng.random_range(0..n_projects);
            let h = (hours.sample(&mut rng) * 100.0).round() / 100.0;
            let months = (date.year() - start.year()) * 12 + date.month() as i32 - start.month() as i32;
            let wage = Money::from_f64_rounded(base_wages[p] * drift.powi(months));
            let task_id = format!("{}-t{}", projects[p].id, projects[p].tasks.len());
            projects[p].tasks.push(Task {
                task_id,
                hours: h.max(MIN_SESSION_HOURS),
                wage,
                session_date: date,
            });
        }
    }
    for p in &mut projects {
        p.tasks.sort_by(|a, b| a.session_date.cmp(&b.session_date).then_with(|| a.task_id.cmp(&b.task_id)));
    }

    // flat-rate engagements
    let fee_dist = lognormal(config.flat_fee);
    let span = i64::from(config.span_days);
    let flat_projects = (0..uniform_in(&mut rng, config.flat_projects))
        .map(|k| {
            let completion = start + Duration::days(rng.random_range(0..span));
            let duration = rng.random_range(20..=75);
            FlatRateProject {
                id: format!("{user_id}-f{k}"),
                fee: Money::from_f64_rounded(fee_dist.sample(&mut rng)).max(Money(100)),
                completion_date: completion,
                start_date: Some(completion - Duration::days(duration)),
            }
        })
        .collect();

    // recurring items
    let mut recurring_items = Vec::new();
    let first_month_day = |rng: &mut ChaCha8Rng| start + Duration::days(rng.random_range(0..28));
    if rng.random_bool(0.5) {
        recurring_items.push(RecurringItem {
            id: format!("{user_id}-retainer"),
            amount: Money(100 * rng.random_range(300..=1200)),
            period: Period::Monthly,
            anchor_date: first_month_day(&mut rng),
            end_date: None,
        });
    }
    recurring_items.push(RecurringItem {
        id: format!("{user_id}-rent"),
        amount: Money(-100 * rng.random_range(200..=600)),
        period: Period::Monthly,
        anchor_date: first_month_day(&mut rng),
        end_date: None,
    });
    if rng.random_bool(0.5) {
        recurring_items.push(RecurringItem {
            id: format!("{user_id}-tools"),
            amount: Money(-100 * rng.random_range(10..=40)),
            period: Period::Weekly,
            anchor_date: first_month_day(&mut rng),
            end_date: None,
        });
    }

    // customers and invoices
    let n_customers = uniform_in(&mut rng, config.customers) as usize;
    // Zipf-like weights: a few regular customers, a long tail of one-offs.
    let weights: Vec<f64> = (0..n_customers).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let trends: Vec<Option<(f64, f64)>> = (0..n_customers)
        .map(|_| {
            rng.random_bool(config.delay.trend_fraction).then(|| {
                if rng.random_bool(0.5) {
                    (0.0, config.delay.trend_slope)
                } else {
                    (15.0, -config.delay.trend_slope)
                }
            })
        })
        .collect();
    let amount_dist = lognormal(config.invoice_amount);
    let noise = Normal::new(0.0, 2.0).expect("valid normal");
    let per_month = Poisson::new(config.invoices_per_month).expect("positive rate");
    let mut invoices = Vec::new();
    let mut per_customer_count = vec![0usize; n_customers];
    let invoicing_start = start - Duration::days(i64::from(config.invoice_lead_days));
    let months = crate::types::DateRange::new(invoicing_start, end).months();
    for month in months {
        let n: f64 = per_month.sample(&mut rng);
        for _ in 0..n as usize {
            let issue = month.day_clamped(rng.random_range(1..=31));
            if issue < invoicing_start || issue > end {
                continue;
            }
            let mut pick = rng.random::<f64>() * weight_sum;
            let mut c = 0;
            while c + 1 < n_customers && pick >= weights[c] {
                pick -= weights[c];
                c += 1;
            }
            let j = per_customer_count[c];
            per_customer_count[c] += 1;
            let delay = match trends[c] {
                Some((base, slope)) => {
                    let expected = (base + slope * j as f64).max(DELAY_FLOOR_DAYS);
                    (expected + noise.sample(&mut rng)).round() as i64
                }
                None => stationary_delay(&mut rng, &config.delay),
            };
            let terms = i64::from(config.invoice_terms_days);
            let due = issue + Duration::days(terms);
            let paid = due + Duration::days(delay.max(-terms));
            invoices.push(
                Invoice::new(
                    format!("{user_id}-i{:04}", invoices.len()),
                    format!("{user_id}-c{c:02}"),
                    Money::from_f64_rounded(amount_dist.sample(&mut rng)).max(Money(100)),
                    issue,
                    due,
                    (paid <= end).then_some(paid),
                )
                .expect("generated invoice is valid"),
            );
        }
    }

    SyntheticUser {
        user_id,
        ledger: ProjectLedger {
            hourly_projects: projects,
            flat_projects,
            recurring_items,
            planned_items: Vec::new(),
        },
        invoices,
    }
}

impl SyntheticDataset {
    /// Writes `manifest.json`, `config.json` and per user `ledger.json` and
    /// `invoices.csv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), GenError> {
        let users_dir = dir.join("users");
        fs::create_dir_all(&users_dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&self.manifest)?)?;
        fs::write(dir.join("config.json"), serde_json::to_vec_pretty(&self.config)?)?;
        for user in &self.users {
            let udir = users_dir.join(&user.user_id);
            fs::create_dir_all(&udir)?;
            fs::write(udir.join("ledger.json"), serde_json::to_vec_pretty(&user.ledger)?)?;
            let file = fs::File::create(udir.join("invoices.csv"))?;
            ingest::write_csv(&user.invoices, io::BufWriter::new(file))?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`SyntheticDataset::write_to`]. The manifest
    /// is recomputed from the files.
    pub fn read_from(dir: &Path) -> Result<SyntheticDataset, GenError> {
        let config: GeneratorConfig = serde_json::from_slice(&fs::read(dir.join("config.json"))?)?;
        let mut entries: Vec<_> = fs::read_dir(dir.join("users"))?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|e| e.path().is_dir())
            .collect();
        entries.sort_by_key(|e| e.file_name());
        let mut users = Vec::with_capacity(entries.len());
        for entry in entries {
            let path = entry.path();
            let ledger: ProjectLedger = serde_json::from_slice(&fs::read(path.join("ledger.json"))?)?;
            let csv_path = path.join("invoices.csv");
            let report = ingest::ingest_csv(fs::File::open(&csv_path)?)?;
            if !report.is_clean() {
                return Err(GenError::InvalidRows {
                    file: csv_path.display().to_string(),
                    detail: format!("{:?}", report.errors),
                });
            }
            users.push(SyntheticUser {
                user_id: entry.file_name().to_string_lossy().into_owned(),
                ledger,
                invoices: report.invoices,
            });
        }
        let manifest = manifest_for(&config, &users);
        Ok(SyntheticDataset {
            config,
            users,
            manifest,
        })
    }
}

/// A single business shaped like a small startup's receivables: 297 invoices
/// across 60 customers, more than half of whom received only one or two.
pub fn startup_batch(seed: u64) -> Vec<Invoice> {
    let mut rng = user_rng(seed, u64::MAX);
    let profile = GeneratorConfig::default().delay;
    let amount_dist = lognormal(MeanStd {
        mean: 150_000.0,
        std: 90_000.0,
    });
    let noise = Normal::new(0.0, 2.0).expect("valid normal");
    // 16 customers x 1 + 16 x 2 = 48 invoices; 28 regulars share the other 249.
    let mut counts: Vec<usize> = Vec::with_capacity(60);
    counts.extend(std::iter::repeat_n(1, 16));
    counts.extend(std::iter::repeat_n(2, 16));
    let regular_total = 297 - 48;
    let base = regular_total / 28;
    let extra = regular_total % 28;
    counts.extend((0..28).map(|k| base + usize::from(k < extra)));

    let start = NaiveDate::from_ymd_opt(2022, 1, 3).expect("valid date");
    let horizon_days = 730;
    let last_day = start + Duration::days(horizon_days);
    let mut invoices = Vec::with_capacity(297);
    for (c, &n) in counts.iter().enumerate() {
        let trend = (c >= 32 && rng.random_bool(0.25)).then(|| {
            if rng.random_bool(0.5) {
                (0.0, 2.0)
            } else {
                (15.0, -2.0)
            }
        });
        let spacing = horizon_days / (n as i64 + 1);
        let offset = rng.random_range(0..spacing.max(1));
        for j in 0..n {
            let issue = start + Duration::days(offset + spacing * j as i64 + rng.random_range(0..5));
            let terms = [14, 30][rng.random_range(0..2)];
            let due = issue + Duration::days(terms);
            let delay = match trend {
                Some((b, s)) => ((b + s * j as f64).max(DELAY_FLOOR_DAYS) + noise.sample(&mut rng)).round() as i64,
                None => stationary_delay(&mut rng, &profile),
            };
            let paid = due + Duration::days(delay.max(-terms));
            invoices.push(
                Invoice::new(
                    format!("s{:03}", invoices.len()),
                    format!("cust{c:02}"),
                    Money::from_f64_rounded(amount_dist.sample(&mut rng)).max(Money(100)),
                    issue,
                    due,
                    (paid <= last_day).then_some(paid),
                )
                .expect("generated invoice is valid"),
            );
        }
    }
    invoices
}
