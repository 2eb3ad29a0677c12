//! Consumer best responses, the minimum-budget condition, equilibrium
//! prices and assembly of the full leader/follower equilibrium.
//!
//! The production path for prices is the closed form
//!
//! ```text
//! p_k(t) = B / (G_k(t) + Z) / (K T - sum_{j,s} Z / (G_j(s) + Z))
//! ```
//!
//! [`equilibrium_prices_linear_solve`] rebuilds the same prices from the
//! dense `K T x K T` system `A P = Y` and exists for diagnostics and tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{compensated_sum, Company, Consumer, DemandProfile, PriceSchedule, Scenario};

/// Tolerance for the algebraic identities (budget/capacity binding, revenue conservation).
pub const IDENTITY_TOL: f64 = 1e-9;

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Closed-form demands of one consumer against a price board.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// `K x T` demands.
    pub demands: Vec<Vec<f64>>,
    /// `sum p * d`; equals the budget up to rounding.
    pub payment: f64,
    /// Cells where the closed form went negative.
    pub negative_cells: Vec<(usize, usize)>,
}

impl BestResponse {
    pub fn is_interior(&self) -> bool {
        self.negative_cells.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.demands.iter().flatten().sum()
    }

    /// The demands, or [`Error::NegativeDemandRegime`] if any cell is negative.
    pub fn into_strict(self) -> Result<Vec<Vec<f64>>> {
        if self.negative_cells.is_empty() {
            Ok(self.demands)
        } else {
            Err(Error::NegativeDemandRegime {
                cells: self.negative_cells,
            })
        }
    }
}

/// Utility-maximizing demands under the budget, assuming no nonnegativity
/// constraint is active:
///
/// `d(k,t) = (B + zeta * sum p) / (K T p(k,t)) - zeta`
///
/// Negative cells are reported in [`BestResponse::negative_cells`], not clamped.
pub fn consumer_best_response(consumer: &Consumer, prices: &PriceSchedule) -> Result<BestResponse> {
    prices.ensure_positive()?;
    Ok(best_response_unchecked(consumer, prices, prices.total()))
}

pub(crate) fn best_response_unchecked(
    consumer: &Consumer,
    prices: &PriceSchedule,
    price_sum: f64,
) -> BestResponse {
    let cells = (prices.companies() * prices.periods()) as f64;
    let numerator = consumer.budget + consumer.zeta * price_sum;
    let mut negative_cells = Vec::new();
    let mut payment = 0.0;
    let demands = prices
        .rows()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(t, &p)| {
                    let d = numerator / (cells * p) - consumer.zeta;
                    if d < 0.0 {
                        negative_cells.push((k, t));
                    }
                    payment += p * d;
                    d
                })
                .collect()
        })
        .collect();
    BestResponse {
        demands,
        payment,
        negative_cells,
    }
}

/// `gamma * sum ln(zeta + d)` over all cells.
pub fn consumer_utility(consumer: &Consumer, demands: &[Vec<f64>]) -> Result<f64> {
    for (k, row) in demands.iter().enumerate() {
        for (t, &d) in row.iter().enumerate() {
            if d < 0.0 {
                return Err(Error::NegativeDemand {
                    company: k,
                    period: t,
                    value: d,
                });
            }
        }
    }
    Ok(utility_unchecked(consumer, demands))
}

/// Utility without the nonnegativity check. Finite whenever `zeta + d > 0`,
/// which the closed-form demands always satisfy.
pub(crate) fn utility_unchecked(consumer: &Consumer, demands: &[Vec<f64>]) -> f64 {
    consumer.gamma
        * demands
            .iter()
            .flatten()
            .map(|&d| (consumer.zeta + d).ln())
            .sum::<f64>()
}

/// Smallest budget for which the closed-form demands reach `energy_min`:
///
/// `B_min = (E_min + zeta K T) / sum 1/(K T p) - zeta * sum p`
///
/// At `B = B_min` the consumer buys exactly `E_min` at the least cost the
/// log-utility split allows. The value may be negative when `E_min` is small.
pub fn minimum_budget(consumer: &Consumer, prices: &PriceSchedule) -> Result<f64> {
    prices.ensure_positive()?;
    let cells = (prices.companies() * prices.periods()) as f64;
    let inv_sum: f64 = prices.cells().map(|(_, _, p)| 1.0 / (cells * p)).sum();
    Ok((consumer.energy_min + consumer.zeta * cells) / inv_sum - consumer.zeta * prices.total())
}

fn ensure_priceable(s: &Scenario) -> Result<()> {
    s.ensure_valid()?;
    if s.aggregate_b() <= 0.0 {
        return Err(Error::ZeroAggregateBudget);
    }
    Ok(())
}

/// `sum_{j,t} G/(G+Z)`, which equals `K T - sum Z/(G+Z)` without the cancellation.
fn price_denominator(s: &Scenario, z: f64) -> Result<f64> {
    let denom = compensated_sum(s.companies.iter().flat_map(|c| c.capacity.iter()).map(|&g| g / (g + z)));
    if denom > 0.0 {
        Ok(denom)
    } else {
        Err(Error::DegenerateDenominator)
    }
}

/// Unique positive prices at which every company's capacity binds.
pub fn equilibrium_prices_closed_form(s: &Scenario) -> Result<PriceSchedule> {
    ensure_priceable(s)?;
    let z = s.aggregate_z();
    let b = s.aggregate_b();
    let denom = price_denominator(s, z)?;
    Ok(PriceSchedule(
        s.companies
            .iter()
            .map(|c| c.capacity.iter().map(|&g| b / (g + z) / denom).collect())
            .collect(),
    ))
}

/// Both sides of the rank-one invertibility condition `1 + v' A_hat^-1 u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShermanMorrisonCheck {
    /// Evaluated from the explicit diagonal `A_hat` and vectors `u`, `v`.
    pub from_matrices: f64,
    /// `1 - (1/KT) sum Z/(G+Z)`.
    pub from_formula: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSolveReport {
    pub closed_form_prices: PriceSchedule,
    pub oracle_prices: PriceSchedule,
    /// `max |closed - oracle| / max(1, |oracle|)`.
    pub max_rel_discrepancy: f64,
    pub sherman_morrison: ShermanMorrisonCheck,
    pub matrix_condition_note: String,
}

/// Largest system for which the report computes a singular-value condition number.
const CONDITION_LIMIT: usize = 400;

/// Builds `A` (diagonal `K T (G + Z) - Z`, off-diagonal `-Z`) and `Y = B`,
/// solves by LU with partial pivoting and compares with the closed form.
pub fn equilibrium_prices_linear_solve(s: &Scenario) -> Result<PriceSolveReport> {
    ensure_priceable(s)?;
    let z = s.aggregate_z();
    let b = s.aggregate_b();
    let periods = s.periods;
    let caps: Vec<f64> = s.companies.iter().flat_map(|c| c.capacity.clone()).collect();
    let m = caps.len();
    let kt = m as f64;

    let a = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            kt * (caps[i] + z) - z
        } else {
            -z
        }
    });
    let y = DVector::from_element(m, b);
    let solution = a.clone().lu().solve(&y).ok_or(Error::SingularMatrix)?;

    // A = A_hat + u v^T with A_hat diagonal, u = -Z 1, v = 1.
    let a_hat = DMatrix::from_fn(m, m, |i, j| if i == j { kt * (caps[i] + z) } else { 0.0 });
    let u = DVector::from_element(m, -z);
    let v = DVector::from_element(m, 1.0);
    let a_hat_inv_u = a_hat
        .clone()
        .lu()
        .solve(&u)
        .ok_or(Error::SingularMatrix)?;
    let from_matrices = 1.0 + v.dot(&a_hat_inv_u);
    let from_formula = 1.0 - caps.iter().map(|&g| z / (g + z)).sum::<f64>() / kt;
    let sherman_morrison = ShermanMorrisonCheck {
        from_matrices,
        from_formula,
    };
    let reconstructed = &a_hat + &u * v.transpose();
    let reconstruction_err = (&reconstructed - &a).amax();

    let oracle = PriceSchedule(
        solution
            .as_slice()
            .chunks(periods)
            .map(<[f64]>::to_vec)
            .collect(),
    );
    let closed = equilibrium_prices_closed_form(s)?;
    let max_rel_discrepancy = closed
        .cells()
        .map(|(k, t, p)| {
            let o = oracle.get(k, t);
            (p - o).abs() / o.abs().max(1.0)
        })
        .fold(0.0, f64::max);

    let mut note = format!(
        "rank-one denominator {from_matrices:.6e}; |A - (A_hat + u v^T)|_max = {reconstruction_err:.1e}"
    );
    if m <= CONDITION_LIMIT {
        let sv = a.singular_values();
        let cond = sv.max() / sv.min();
        note.push_str(&format!("; cond_2(A) = {cond:.3e}"));
    }

    Ok(PriceSolveReport {
        closed_form_prices: closed,
        oracle_prices: oracle,
        max_rel_discrepancy,
        sherman_morrison,
        matrix_condition_note: note,
    })
}

/// A `(company, period)` cell.
pub type Cell = (usize, usize);

/// Projects each price into its company's `[p_min, p_max]` and lists the
/// cells that moved.
pub fn clamp_prices(prices: &PriceSchedule, companies: &[Company]) -> (PriceSchedule, Vec<Cell>) {
    let mut clamped = Vec::new();
    let rows = prices
        .rows()
        .iter()
        .zip(companies)
        .enumerate()
        .map(|(k, (row, company))| {
            row.iter()
                .enumerate()
                .map(|(t, &p)| {
                    let (lo, hi) = company.price_bounds(t);
                    let q = p.max(lo).min(hi);
                    if q != p {
                        clamped.push((k, t));
                    }
                    q
                })
                .collect()
        })
        .collect();
    (PriceSchedule(rows), clamped)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFlags {
    /// Cells whose equilibrium price was clamped to its bounds.
    pub clamped: Vec<Cell>,
    /// Consumers with at least one negative closed-form demand.
    pub negative_demand: Vec<String>,
    /// Consumers whose demand falls short of `energy_min` (budget below the minimum).
    pub infeasible_budget: Vec<String>,
}

impl OutcomeFlags {
    pub fn is_clean(&self) -> bool {
        self.clamped.is_empty() && self.negative_demand.is_empty() && self.infeasible_budget.is_empty()
    }

    /// Whether the budget/capacity/revenue identities are expected to hold.
    pub fn identities_apply(&self) -> bool {
        self.clamped.is_empty() && self.negative_demand.is_empty()
    }
}

/// Worst relative residuals of the equilibrium identities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityChecks {
    /// `max_n |sum p d - B_n| / B_n`.
    pub budget_binding: f64,
    /// `max_{k,t} |sum_n d - G|`, relative; `None` when suppressed.
    pub capacity_binding: Option<f64>,
    /// `|sum_k U_k - sum_n B_n|`, relative; `None` when suppressed.
    pub revenue_conservation: Option<f64>,
}

impl IdentityChecks {
    pub fn worst(&self) -> f64 {
        self.budget_binding
            .max(self.capacity_binding.unwrap_or(0.0))
            .max(self.revenue_conservation.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub prices: PriceSchedule,
    pub demands: DemandProfile,
    /// `U_k = sum_t p_k(t) sum_n d_{n,k}(t)`.
    pub revenues: Vec<f64>,
    /// Evaluated on the closed-form demands even when some are negative
    /// (`zeta + d > 0` always holds there).
    pub consumer_utilities: Vec<f64>,
    pub flags: OutcomeFlags,
    pub checks: IdentityChecks,
}

impl EquilibriumOutcome {
    /// Demand-weighted mean price of each period across companies.
    pub fn mean_price_per_period(&self) -> Vec<f64> {
        let agg = self.demands.aggregate_board();
        let periods = self.prices.periods();
        (0..periods)
            .map(|t| {
                let energy: f64 = agg.iter().map(|row| row[t]).sum();
                let paid: f64 = agg
                    .iter()
                    .zip(self.prices.rows())
                    .map(|(row, p)| row[t] * p[t])
                    .sum();
                if energy != 0.0 {
                    paid / energy
                } else {
                    self.prices.rows().iter().map(|p| p[t]).sum::<f64>() / self.prices.companies() as f64
                }
            })
            .collect()
    }
}

/// Closed-form prices, clamped to bounds, followed by every consumer's best
/// response. Regime problems are reported through [`OutcomeFlags`].
pub fn stackelberg_equilibrium(s: &Scenario) -> Result<EquilibriumOutcome> {
    stackelberg_equilibrium_with(s, Execution::default())
}

pub fn stackelberg_equilibrium_with(s: &Scenario, exec: Execution) -> Result<EquilibriumOutcome> {
    let raw = equilibrium_prices_closed_form(s)?;
    let (prices, clamped) = clamp_prices(&raw, &s.companies);
    outcome_at_prices(s, prices, clamped, exec)
}

/// Consumers' responses, revenues and utilities at a given board.
pub fn outcome_at_prices(
    s: &Scenario,
    prices: PriceSchedule,
    clamped: Vec<Cell>,
    exec: Execution,
) -> Result<EquilibriumOutcome> {
    prices.check_shape(s.k(), s.periods)?;
    prices.ensure_positive()?;
    let price_sum = prices.total();
    let responses = exec.map_slice(&s.consumers, |c| {
        let r = best_response_unchecked(c, &prices, price_sum);
        let u = utility_unchecked(c, &r.demands);
        (r, u)
    });

    let mut flags = OutcomeFlags {
        clamped,
        ..OutcomeFlags::default()
    };
    let mut budget_binding: f64 = 0.0;
    let mut utilities = Vec::with_capacity(responses.len());
    let mut demands = Vec::with_capacity(responses.len());
    for (c, (r, u)) in s.consumers.iter().zip(responses) {
        if !r.is_interior() {
            flags.negative_demand.push(c.id.clone());
        }
        if r.total() < c.energy_min * (1.0 - IDENTITY_TOL) {
            flags.infeasible_budget.push(c.id.clone());
        }
        budget_binding = budget_binding.max(rel_diff(r.payment, c.budget));
        utilities.push(u);
        demands.push(r.demands);
    }
    let demands = DemandProfile(demands);
    let aggregate = demands.aggregate_board();
    let revenues: Vec<f64> = prices
        .rows()
        .iter()
        .zip(&aggregate)
        .map(|(p, d)| p.iter().zip(d).map(|(p, d)| p * d).sum())
        .collect();

    let mut checks = IdentityChecks {
        budget_binding,
        ..IdentityChecks::default()
    };
    if flags.identities_apply() {
        let cap = s
            .companies
            .iter()
            .zip(&aggregate)
            .flat_map(|(c, d)| c.capacity.iter().zip(d).map(|(&g, &x)| rel_diff(x, g)))
            .fold(0.0, f64::max);
        checks.capacity_binding = Some(cap);
        checks.revenue_conservation = Some(rel_diff(revenues.iter().sum(), s.aggregate_b()));
    }

    Ok(EquilibriumOutcome {
        prices,
        demands,
        revenues,
        consumer_utilities: utilities,
        flags,
        checks,
    })
}
