use serde::{Deserialize, Serialize};

use super::data::ExperimentSeries;
use crate::equilibrium::minimum_budget;
use crate::error::{Error, Result};
use crate::model::{Company, Consumer, PriceSchedule, Scenario};

pub const SHARE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetClass {
    pub count: usize,
    pub budget: f64,
}

/// How consumer budgets are set.
#[derive(Debug, Clone, PartialEq)]
pub enum BudgetSpec {
    /// Every consumer gets the minimum budget that buys the average energy
    /// need at the experimental prices.
    Minimum,
    Classes(Vec<BudgetClass>),
}

/// Average energy per consumer, `sum_t load(t) / N`.
pub fn energy_per_consumer(series: &ExperimentSeries) -> f64 {
    series.total_load() / series.population as f64
}

/// Minimum budget of a unit-preference consumer needing `energy` at the
/// experimental prices, replicated across `companies`.
pub fn experimental_minimum_budget(series: &ExperimentSeries, companies: usize, energy: f64) -> Result<f64> {
    let consumer = Consumer::unit("probe", 0.0, energy);
    minimum_budget(&consumer, &PriceSchedule::replicated(companies, &series.prices))
}

/// Builds a scenario from an experiment: company `k` supplies
/// `share_k * load(t)` and every consumer needs `sum_t load(t) / N`.
pub fn derive_scenario_from_experiment(
    series: &ExperimentSeries,
    shares: &[f64],
    budgets: &BudgetSpec,
) -> Result<Scenario> {
    if shares.is_empty() || shares.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter("company shares must be finite and >= 0".into()));
    }
    let share_sum: f64 = shares.iter().sum();
    if (share_sum - 1.0).abs() > SHARE_TOL {
        return Err(Error::ShareSum(share_sum));
    }
    let n = series.population;
    let energy = energy_per_consumer(series);
    let budget_list: Vec<f64> = match budgets {
        BudgetSpec::Minimum => {
            let b = experimental_minimum_budget(series, shares.len(), energy)?;
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("minimum budget {b} is not positive")));
            }
            vec![b; n]
        }
        BudgetSpec::Classes(classes) => {
            let got: usize = classes.iter().map(|c| c.count).sum();
            if got != n {
                return Err(Error::CountMismatch { expected: n, got });
            }
            if classes.iter().any(|c| !(c.budget > 0.0 && c.budget.is_finite())) {
                return Err(Error::NonPositiveInput("budget"));
            }
            classes.iter().flat_map(|c| std::iter::repeat(c.budget).take(c.count)).collect()
        }
    };
    let width = n.to_string().len();
    let consumers = budget_list
        .into_iter()
        .enumerate()
        .map(|(i, b)| Consumer::unit(format!("u{:0width$}", i + 1), b, energy))
        .collect();
    let companies = shares
        .iter()
        .enumerate()
        .map(|(k, &share)| Company::new(format!("g{}", k + 1), series.loads.iter().map(|l| share * l).collect()))
        .collect();
    let s = Scenario::new(series.periods, consumers, companies);
    s.ensure_valid()?;
    Ok(s)
}
