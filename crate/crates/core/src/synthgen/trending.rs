use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::user_rng;
use crate::types::{CustomerHistory, Invoice, Money};

/// Lower bound on the expected delay of a trending customer.
pub const DELAY_FLOOR_DAYS: f64 = -5.0;

/// Customers whose expected delay moves linearly with each new invoice:
/// `max(base + slope * j, -5) + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendingCustomers {
    pub base: f64,
    pub slope: f64,
    pub invoices_per_customer: usize,
    pub noise_std: f64,
    pub spacing_days: i64,
    pub terms_days: i64,
    pub start_date: NaiveDate,
}

impl Default for TrendingCustomers {
    fn default() -> Self {
        TrendingCustomers {
            base: 0.0,
            slope: 2.0,
            invoices_per_customer: 12,
            noise_std: 1.5,
            spacing_days: 30,
            terms_days: 14,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
        }
    }
}

impl TrendingCustomers {
    fn customer(&self, rng: &mut ChaCha8Rng, customer_id: &str, prefix: &str) -> Vec<Invoice> {
        let noise = Normal::new(0.0, self.noise_std.max(0.0)).expect("valid normal");
        let amounts = LogNormal::new(10.5, 0.5).expect("valid lognormal");
        let mut issue = self.start_date + Duration::days(rng.random_range(0..self.spacing_days.max(1)));
        (0..self.invoices_per_customer)
            .map(|j| {
                let expected = (self.base + self.slope * j as f64).max(DELAY_FLOOR_DAYS);
                let delay = (expected + noise.sample(rng)).round() as i64;
                let due = issue + Duration::days(self.terms_days);
                let paid = due + Duration::days(delay.max(-self.terms_days));
                let inv = Invoice::new(
                    format!("{prefix}-{j:03}"),
                    customer_id,
                    Money::from_f64_rounded(amounts.sample(rng)).max(Money(100)),
                    issue,
                    due,
                    Some(paid),
                )
                .expect("generated invoice is valid");
                issue += Duration::days(self.spacing_days + rng.random_range(-3..=3));
                inv
            })
            .collect()
    }

    pub fn generate(&self, n: usize, seed: u64) -> Vec<CustomerHistory> {
        let mut rng = user_rng(seed, 1 << 32);
        (0..n)
            .map(|c| {
                let id = format!("tc{c:04}");
                let invs = self.customer(&mut rng, &id, &format!("{id}-inv"));
                CustomerHistory::new(id, invs)
            })
            .collect()
    }
}

/// `n` customers with 12 fully paid invoices each, whose delays follow
/// `max(slope * j, -5)` plus small noise.
pub fn generate_trending_customers(n: usize, slope: f64, seed: u64) -> Vec<CustomerHistory> {
    TrendingCustomers {
        slope,
        ..TrendingCustomers::default()
    }
    .generate(n, seed)
}

/// A single business whose customers are a mix of deteriorating, improving,
/// steadily punctual and steadily late payers.
pub fn trending_dataset(n_customers: usize, seed: u64) -> Vec<Invoice> {
    let mut rng = user_rng(seed, 1 << 33);
    let mut out = Vec::new();
    for c in 0..n_customers {
        let magnitude = rng.random_range(1.5..3.0);
        let (base, slope) = match c % 4 {
            0 => (rng.random_range(-2.0..2.0), magnitude),
            1 => (rng.random_range(14.0..20.0), -magnitude),
            2 => (rng.random_range(-2.0..5.0), 0.0),
            _ => (rng.random_range(9.0..18.0), 0.0),
        };
        let profile = TrendingCustomers {
            base,
            slope,
            invoices_per_customer: 10,
            noise_std: 2.0,
            start_date: TrendingCustomers::default().start_date + Duration::days(rng.random_range(0..60)),
            ..TrendingCustomers::default()
        };
        let id = format!("cust{c:04}");
        out.extend(profile.customer(&mut rng, &id, &format!("{id}-inv")));
    }
    out
}
