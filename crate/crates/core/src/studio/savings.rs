use serde::{Deserialize, Serialize};

use super::data::ExperimentSeries;
use crate::equilibrium::EquilibriumOutcome;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub currency: String,
    /// `sum_t p_exp(t) load(t)`, all consumers.
    pub experimental_billing: f64,
    /// Total paid at the game equilibrium; equals the sum of budgets.
    pub game_billing: f64,
    pub savings_fraction: f64,
    pub experimental_per_consumer: f64,
    pub game_per_consumer: f64,
    pub experimental_energy: f64,
    pub game_energy: f64,
    pub experimental_price_variance: f64,
    /// Variance over periods of the demand-weighted game price.
    pub game_price_variance: f64,
    pub experimental_mean_price: f64,
    pub game_mean_price: f64,
    pub cumulative_experimental: Vec<f64>,
    pub cumulative_game: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

fn running_sum(v: impl Iterator<Item = f64>) -> Vec<f64> {
    v.scan(0.0, |acc, x| {
        *acc += x;
        Some(*acc)
    })
    .collect()
}

/// Per-period payment `sum_k p_k(t) D_k(t)` at the game outcome.
pub fn game_payments(outcome: &EquilibriumOutcome) -> Vec<f64> {
    let agg = outcome.demands.aggregate_board();
    (0..outcome.prices.periods())
        .map(|t| {
            outcome
                .prices
                .rows()
                .iter()
                .zip(&agg)
                .map(|(p, d)| p[t] * d[t])
                .sum()
        })
        .collect()
}

/// Compares what consumers paid in the experiment with what they pay at
/// the game equilibrium.
pub fn billing_savings_report(series: &ExperimentSeries, outcome: &EquilibriumOutcome) -> Result<SavingsReport> {
    if outcome.prices.periods() != series.periods {
        return Err(Error::Shape(format!(
            "outcome has {} periods, series has {}",
            outcome.prices.periods(),
            series.periods
        )));
    }
    let experimental_billing = series.billing();
    let game_billing: f64 = outcome.revenues.iter().sum();
    let n = series.population as f64;
    let game_prices = outcome.mean_price_per_period();
    let payments = game_payments(outcome);
    Ok(SavingsReport {
        currency: series.currency.clone(),
        experimental_billing,
        game_billing,
        savings_fraction: 1.0 - game_billing / experimental_billing,
        experimental_per_consumer: experimental_billing / n,
        game_per_consumer: game_billing / n,
        experimental_energy: series.total_load(),
        game_energy: outcome.demands.total(),
        experimental_price_variance: variance(&series.prices),
        game_price_variance: variance(&game_prices),
        experimental_mean_price: mean(&series.prices),
        game_mean_price: mean(&game_prices),
        cumulative_experimental: running_sum(series.prices.iter().zip(&series.loads).map(|(p, l)| p * l)),
        cumulative_game: running_sum(payments.into_iter()),
    })
}
