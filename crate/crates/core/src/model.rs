//! Domain types shared by every module.
//!
//! Units are fixed: energy in kWh, prices in currency per kWh, budgets in
//! currency. Consumers and companies are iterated in list order everywhere.
//!
//! Scenario JSON:
//!
//! ```json
//! {
//!   "periods": 2,
//!   "consumers": [
//!     {"id": "c1", "budget": 12.0, "energy_min": 0.0, "gamma": 1.0, "zeta": 1.0}
//!   ],
//!   "companies": [
//!     {"id": "k1", "capacity": [2.0, 4.0], "price_min": [0.001, 0.001],
//!      "price_max": [1000.0, 1000.0], "total_capacity": 6.0}
//!   ]
//! }
//! ```
//!
//! `price_min`/`price_max` may be omitted (unbounded) and `total_capacity`
//! defaults to the sum of `capacity`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consumer {
    pub id: String,
    /// Budget for the whole horizon.
    pub budget: f64,
    /// Minimum energy over the whole horizon.
    pub energy_min: f64,
    pub gamma: f64,
    pub zeta: f64,
}

impl Consumer {
    /// A consumer with `gamma = zeta = 1`.
    pub fn unit(id: impl Into<String>, budget: f64, energy_min: f64) -> Self {
        Consumer {
            id: id.into(),
            budget,
            energy_min,
            gamma: 1.0,
            zeta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Company {
    pub id: String,
    /// Power availability per period.
    pub capacity: Vec<f64>,
    /// Lower price bound per period; empty means unbounded.
    #[serde(default)]
    pub price_min: Vec<f64>,
    /// Upper price bound per period; empty means unbounded.
    #[serde(default)]
    pub price_max: Vec<f64>,
    /// Total power across the horizon, used by the allocation game.
    #[serde(default = "nan")]
    pub total_capacity: f64,
}

fn nan() -> f64 {
    f64::NAN
}

impl Company {
    /// Company with unbounded prices and `total_capacity = sum(capacity)`.
    pub fn new(id: impl Into<String>, capacity: Vec<f64>) -> Self {
        let total = capacity.iter().sum();
        Company {
            id: id.into(),
            capacity,
            price_min: Vec::new(),
            price_max: Vec::new(),
            total_capacity: total,
        }
    }

    pub fn with_bounds(mut self, price_min: Vec<f64>, price_max: Vec<f64>) -> Self {
        self.price_min = price_min;
        self.price_max = price_max;
        self
    }

    pub fn with_total_capacity(mut self, total: f64) -> Self {
        self.total_capacity = total;
        self
    }

    /// `[p_min, p_max]` for period `t`.
    pub fn price_bounds(&self, t: usize) -> (f64, f64) {
        let lo = self.price_min.get(t).copied().unwrap_or(0.0);
        let hi = self.price_max.get(t).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn total(&self) -> f64 {
        if self.total_capacity.is_nan() {
            self.capacity.iter().sum()
        } else {
            self.total_capacity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub periods: usize,
    pub consumers: Vec<Consumer>,
    pub companies: Vec<Company>,
}

impl Scenario {
    pub fn new(periods: usize, consumers: Vec<Consumer>, companies: Vec<Company>) -> Self {
        let mut s = Scenario {
            periods,
            consumers,
            companies,
        };
        s.fill_totals();
        s
    }

    fn fill_totals(&mut self) {
        for c in &mut self.companies {
            if c.total_capacity.is_nan() {
                c.total_capacity = c.capacity.iter().sum();
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut s: Scenario = serde_json::from_str(text)?;
        s.fill_totals();
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Number of consumers, `N`.
    pub fn n(&self) -> usize {
        self.consumers.len()
    }

    /// Number of companies, `K`.
    pub fn k(&self) -> usize {
        self.companies.len()
    }

    /// `Z = sum of zeta_n`.
    pub fn aggregate_z(&self) -> f64 {
        self.consumers.iter().map(|c| c.zeta).sum()
    }

    /// `B = sum of B_n`.
    pub fn aggregate_b(&self) -> f64 {
        self.consumers.iter().map(|c| c.budget).sum()
    }

    /// Capacities as a `K x T` board.
    pub fn capacity_board(&self) -> Vec<Vec<f64>> {
        self.companies.iter().map(|c| c.capacity.clone()).collect()
    }

    /// Errors with [`Error::InvalidScenario`] if any error-severity rule fails.
    pub fn ensure_valid(&self) -> Result<()> {
        let errors: Vec<_> = validate_scenario(self)
            .into_iter()
            .filter(|v| v.severity == Severity::Error)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(errors))
        }
    }

    /// True when every consumer has `gamma = zeta = 1`.
    pub fn is_unit_preference(&self) -> bool {
        self.consumers.iter().all(|c| c.zeta == 1.0 && c.gamma == 1.0)
    }
}

/// Company-by-period price board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceSchedule(pub Vec<Vec<f64>>);

impl PriceSchedule {
    pub fn uniform(companies: usize, periods: usize, value: f64) -> Self {
        PriceSchedule(vec![vec![value; periods]; companies])
    }

    /// The same per-period prices for every company.
    pub fn replicated(companies: usize, prices: &[f64]) -> Self {
        PriceSchedule(vec![prices.to_vec(); companies])
    }

    pub fn companies(&self) -> usize {
        self.0.len()
    }

    pub fn periods(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.0[k][t]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Sum over all companies and periods.
    /// Sum of all prices, compensated so that equal-price boards sum exactly.
    pub fn total(&self) -> f64 {
        compensated_sum(self.0.iter().flatten().copied())
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(k, row)| row.iter().enumerate().map(move |(t, &p)| (k, t, p)))
    }

    /// First cell whose price is not strictly positive (or not finite).
    pub fn first_non_positive(&self) -> Option<(usize, usize, f64)> {
        self.cells().find(|&(_, _, p)| !(p > 0.0 && p.is_finite()))
    }

    pub(crate) fn check_shape(&self, companies: usize, periods: usize) -> Result<()> {
        if self.companies() != companies || self.0.iter().any(|r| r.len() != periods) {
            return Err(Error::Shape(format!(
                "price board must be {companies}x{periods}"
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_positive(&self) -> Result<()> {
        match self.first_non_positive() {
            Some((company, period, value)) => Err(Error::NonPositivePrice {
                company,
                period,
                value,
            }),
            None => Ok(()),
        }
    }
}

/// Consumer-by-company-by-period demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandProfile(pub Vec<Vec<Vec<f64>>>);

impl DemandProfile {
    pub fn consumer(&self, n: usize) -> &[Vec<f64>] {
        &self.0[n]
    }

    /// `sum_n d[n][k][t]`, summed in consumer order.
    pub fn aggregate(&self, k: usize, t: usize) -> f64 {
        self.0.iter().map(|d| d[k][t]).sum()
    }

    /// Aggregate demand board `K x T`.
    pub fn aggregate_board(&self) -> Vec<Vec<f64>> {
        let Some(first) = self.0.first() else {
            return Vec::new();
        };
        let mut board = vec![vec![0.0; first.first().map_or(0, Vec::len)]; first.len()];
        for d in &self.0 {
            for (row, drow) in board.iter_mut().zip(d) {
                for (b, x) in row.iter_mut().zip(drow) {
                    *b += x;
                }
            }
        }
        board
    }

    pub fn consumer_total(&self, n: usize) -> f64 {
        self.0[n].iter().flatten().sum()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().flatten().sum()
    }
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub rule: String,
    pub severity: Severity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}.{}: {}", self.entity, self.field, self.rule)
    }
}

/// Checks every type invariant and reports what is broken. Never fails.
///
/// Zero-capacity periods are reported with [`Severity::Warning`]; every other
/// rule is an error.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: &str, field: &str, rule: &str, severity| {
        out.push(Violation {
            entity: entity.to_string(),
            field: field.to_string(),
            rule: rule.to_string(),
            severity,
        })
    };
    use Severity::*;

    if s.periods == 0 {
        push("scenario", "periods", "periods >= 1", Error);
    }
    if s.consumers.is_empty() {
        push("scenario", "consumers", "at least one consumer", Error);
    }
    if s.companies.is_empty() {
        push("scenario", "companies", "at least one company", Error);
    }

    let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
    for (i, c) in s.consumers.iter().enumerate() {
        let name = format!("consumer[{i}:{}]", c.id);
        if s.consumers[..i].iter().any(|o| o.id == c.id) {
            push(&name, "id", "unique id", Error);
        }
        if !finite_nonneg(c.budget) {
            push(&name, "budget", "budget finite and >= 0", Error);
        }
        if !finite_nonneg(c.energy_min) {
            push(&name, "energy_min", "energy_min finite and >= 0", Error);
        }
        if !(c.gamma > 0.0 && c.gamma.is_finite()) {
            push(&name, "gamma", "gamma > 0", Error);
        }
        if !(c.zeta >= 1.0 && c.zeta.is_finite()) {
            push(&name, "zeta", "zeta >= 1", Error);
        }
    }

    for (i, c) in s.companies.iter().enumerate() {
        let name = format!("company[{i}:{}]", c.id);
        if s.companies[..i].iter().any(|o| o.id == c.id) {
            push(&name, "id", "unique id", Error);
        }
        if c.capacity.len() != s.periods {
            push(&name, "capacity", "capacity length = T", Error);
        }
        if c.capacity.iter().any(|&g| !finite_nonneg(g)) {
            push(&name, "capacity", "capacity finite and >= 0", Error);
        } else if c.capacity.iter().any(|&g| g == 0.0) {
            push(&name, "capacity", "capacity > 0 in every period", Warning);
        }
        if !c.total_capacity.is_nan() && !finite_nonneg(c.total_capacity) {
            push(&name, "total_capacity", "total_capacity finite and >= 0", Error);
        }
        for (field, bounds) in [("price_min", &c.price_min), ("price_max", &c.price_max)] {
            if !bounds.is_empty() && bounds.len() != s.periods {
                push(&name, field, "bound length = T (or empty)", Error);
            }
        }
        if c.price_min.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            push(&name, "price_min", "price_min > 0", Error);
        }
        if c.price_max.iter().any(|&p| p.is_nan()) {
            push(&name, "price_max", "price_max is a number", Error);
        }
        if c
            .price_min
            .iter()
            .zip(&c.price_max)
            .any(|(lo, hi)| lo > hi)
        {
            push(&name, "price_min", "price_min <= price_max", Error);
        }
    }
    out
}
