//! Behaviour of the symmetric equilibrium as the number of periods or the
//! number of consumers grows, and the company-to-user ratio that keeps
//! prices under a cap.
//!
//! Every company has the same total power `G_total`, split uniformly across
//! periods, and `zeta = gamma = 1`. Under those assumptions
//!
//! ```text
//! p*    = sum B / (K G_total)
//! d*_n  = G_total B_n / (T sum B)
//! U_n   = K T ln(1 + G_total B_n / (T sum B))  ->  K G_total B_n / sum B
//! U_k   = sum B / K
//! ```
//!
//! Each sweep point is also evaluated through the general equilibrium on the
//! concrete scenario and the two paths are compared.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{rel_diff, stackelberg_equilibrium_with};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{Company, Consumer, Scenario};

/// Largest `N K T` for which a sweep point is cross-checked on a concrete scenario.
pub const CROSS_CHECK_CELLS: usize = 200_000;
pub const MAX_PERIODS: usize = 4096;
pub const MAX_POPULATION: usize = 1_000_000;

/// Symmetric market: `companies` firms with equal total power, consumers
/// with the listed budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricBase {
    pub companies: usize,
    /// Total power of each company; all entries must be equal.
    pub total_capacity: Vec<f64>,
    pub budgets: Vec<f64>,
    /// Horizon used by the population sweep.
    #[serde(default = "one")]
    pub periods: usize,
    /// Consumer whose demand and utility are reported.
    #[serde(default)]
    pub focus: usize,
}

fn one() -> usize {
    1
}

impl SymmetricBase {
    pub fn new(companies: usize, total_capacity: f64, budgets: Vec<f64>) -> Self {
        SymmetricBase {
            companies,
            total_capacity: vec![total_capacity; companies],
            budgets,
            periods: 1,
            focus: 0,
        }
    }

    fn common_total(&self) -> Result<f64> {
        if self.companies == 0 || self.total_capacity.len() != self.companies {
            return Err(Error::AsymmetricScenario(
                "total_capacity must list one value per company".into(),
            ));
        }
        let g = self.total_capacity[0];
        if self.total_capacity.iter().any(|&x| x != g) {
            return Err(Error::AsymmetricScenario("companies differ in total power".into()));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::NonPositiveInput("total_capacity"));
        }
        Ok(g)
    }

    fn check_budgets(&self) -> Result<()> {
        if self.budgets.is_empty() || self.budgets.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::NonPositiveInput("budgets"));
        }
        if self.focus >= self.budgets.len() {
            return Err(Error::InvalidParameter("focus consumer out of range".into()));
        }
        Ok(())
    }

    /// Concrete scenario with every company at the uniform split, for a
    /// given horizon and budgets.
    pub fn scenario(&self, periods: usize, budgets: &[f64]) -> Result<Scenario> {
        let g = self.common_total()?;
        let consumers = budgets
            .iter()
            .enumerate()
            .map(|(i, &b)| Consumer::unit(format!("u{}", i + 1), b, 0.0))
            .collect();
        let companies = (0..self.companies)
            .map(|k| Company::new(format!("g{}", k + 1), vec![g / periods as f64; periods]).with_total_capacity(g))
            .collect();
        Ok(Scenario::new(periods, consumers, companies))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Periods,
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `T` or `N`.
    pub value: usize,
    pub price: f64,
    /// Focus consumer's demand per company per period.
    pub demand_per_cell: f64,
    pub user_utility: f64,
    pub company_revenue: f64,
    /// Worst relative gap to the general equilibrium, if it was evaluated.
    pub cross_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitValues {
    pub utility: f64,
    pub demand_per_cell: f64,
    /// `None` when revenue grows without bound.
    pub company_revenue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    pub limit_values: LimitValues,
}

impl RegimeSweepResult {
    /// CSV with header `axis_value,price,demand_per_cell,user_utility,company_revenue`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis_value", "price", "demand_per_cell", "user_utility", "company_revenue"])?;
        for p in &self.points {
            w.write_record([
                p.value.to_string(),
                p.price.to_string(),
                p.demand_per_cell.to_string(),
                p.user_utility.to_string(),
                p.company_revenue.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn worst_cross_check(&self) -> Option<f64> {
        self.points.iter().filter_map(|p| p.cross_check).reduce(f64::max)
    }
}

fn sorted_unique(values: &[usize], max: usize, what: &'static str) -> Result<Vec<usize>> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.first() == Some(&0) {
        return Err(Error::NonPositiveInput(what));
    }
    if v.last().is_some_and(|&x| x > max) {
        return Err(Error::InvalidParameter(format!("{what} above {max}")));
    }
    Ok(v)
}

/// Per-user utility `K T ln(1 + x / T)`, computed with `ln_1p`.
pub fn periods_utility(companies: usize, periods: usize, share_of_power: f64) -> f64 {
    let t = periods as f64;
    companies as f64 * t * (share_of_power / t).ln_1p()
}

/// Sweep over the number of periods with fixed budgets and total power.
pub fn sweep_periods(base: &SymmetricBase, t_values: &[usize], exec: Execution) -> Result<RegimeSweepResult> {
    let g = base.common_total()?;
    base.check_budgets()?;
    let ts = sorted_unique(t_values, MAX_PERIODS, "periods")?;
    let kk = base.companies as f64;
    let total_b: f64 = base.budgets.iter().sum();
    let b_n = base.budgets[base.focus];
    // Focus consumer's share of total power over the horizon.
    let x = g * b_n / total_b;

    let points = exec.map_slice(&ts, |&t| -> Result<SweepPoint> {
        let tf = t as f64;
        let mut point = SweepPoint {
            value: t,
            price: total_b / (kk * g),
            demand_per_cell: x / tf,
            user_utility: periods_utility(base.companies, t, x),
            company_revenue: total_b / kk,
            cross_check: None,
        };
        if base.budgets.len() * base.companies * t <= CROSS_CHECK_CELLS {
            let s = base.scenario(t, &base.budgets)?;
            point.cross_check = Some(compare(&point, &s, base.focus)?);
        }
        Ok(point)
    });
    Ok(RegimeSweepResult {
        axis: Axis::Periods,
        points: points.into_iter().collect::<Result<_>>()?,
        limit_values: LimitValues {
            utility: kk * x,
            demand_per_cell: 0.0,
            company_revenue: Some(total_b / kk),
        },
    })
}

/// Sweep over the number of identical consumers with fixed total power.
pub fn sweep_population(base: &SymmetricBase, n_values: &[usize], exec: Execution) -> Result<RegimeSweepResult> {
    let g = base.common_total()?;
    base.check_budgets()?;
    let b_n = base.budgets[0];
    if base.budgets.iter().any(|&b| b != b_n) {
        return Err(Error::AsymmetricScenario("population sweep needs identical budgets".into()));
    }
    if base.periods == 0 {
        return Err(Error::NonPositiveInput("periods"));
    }
    let ns = sorted_unique(n_values, MAX_POPULATION, "population")?;
    let kk = base.companies as f64;
    let t = base.periods;
    let tf = t as f64;
    let g_star = g / tf;

    let points = exec.map_slice(&ns, |&n| -> Result<SweepPoint> {
        let nf = n as f64;
        let price = nf * b_n / (kk * tf * g_star);
        let demand = g / (tf * nf);
        let mut point = SweepPoint {
            value: n,
            price,
            demand_per_cell: demand,
            user_utility: kk * tf * demand.ln_1p(),
            company_revenue: price * g,
            cross_check: None,
        };
        if n * base.companies * t <= CROSS_CHECK_CELLS {
            let s = base.scenario(t, &vec![b_n; n])?;
            point.cross_check = Some(compare(&point, &s, 0)?);
        }
        Ok(point)
    });
    let points: Vec<SweepPoint> = points.into_iter().collect::<Result<_>>()?;
    Ok(RegimeSweepResult {
        axis: Axis::Population,
        points,
        limit_values: LimitValues {
            utility: 0.0,
            demand_per_cell: 0.0,
            company_revenue: None,
        },
    })
}

/// Worst relative gap between a sweep point and the general equilibrium.
fn compare(point: &SweepPoint, s: &Scenario, focus: usize) -> Result<f64> {
    let eq = stackelberg_equilibrium_with(s, Execution::Sequential)?;
    let price_gap = eq
        .prices
        .cells()
        .map(|(_, _, p)| rel_diff(p, point.price))
        .fold(0.0, f64::max);
    let demand_gap = eq.demands.0[focus]
        .iter()
        .flatten()
        .map(|&d| rel_diff(d, point.demand_per_cell))
        .fold(0.0, f64::max);
    let revenue_gap = eq
        .revenues
        .iter()
        .map(|&r| rel_diff(r, point.company_revenue))
        .fold(0.0, f64::max);
    let utility_gap = rel_diff(eq.consumer_utilities[focus], point.user_utility);
    Ok(price_gap.max(demand_gap).max(revenue_gap).max(utility_gap))
}

/// Smallest `K / N` keeping symmetric prices at or below `p_max`:
/// `B_n / (p_max T G*)`.
pub fn min_company_ratio(budget: f64, p_max: f64, periods: usize, g_star: f64) -> Result<f64> {
    for (name, v) in [("budget", budget), ("p_max", p_max), ("g_star", g_star)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveInput(name));
        }
    }
    if periods == 0 {
        return Err(Error::NonPositiveInput("periods"));
    }
    Ok(budget / (p_max * periods as f64 * g_star))
}

/// Symmetric price with `n` identical consumers and `k` companies:
/// `N B_n / (K T G*)`.
pub fn symmetric_price(n: usize, budget: f64, k: usize, periods: usize, g_star: f64) -> f64 {
    n as f64 * budget / (k as f64 * periods as f64 * g_star)
}
