//! Case-study pipeline: measured hourly prices and loads in, scenario,
//! equilibrium and billing comparison out.
//!
//! ```text
//! CSV -> ExperimentSeries -> Scenario -> EquilibriumOutcome -> SavingsReport
//! ```
//!
//! [`run_case_study`] drives the whole chain from a TOML config and writes a
//! report bundle (`equilibrium.json`, `savings.json`, `series.csv`, plus
//! `trace.jsonl` and `period_sweep.csv` when those stages are configured).

mod casestudy;
mod data;
mod derive;
mod savings;

pub use casestudy::{
    period_sweep, run_case_study, run_case_study_with, AllocationMode, BudgetConfig, CaseStudyConfig,
    CaseStudyReport, DerivedSummary, DistributedConfig, DistributedSummary, EquilibriumSummary,
    PeriodSweepConfig, PeriodSweepRow, RANDOM_INIT_RANGE,
};
pub use data::{load_case_data, parse_case_data, ExperimentSeries};
pub use derive::{
    derive_scenario_from_experiment, energy_per_consumer, experimental_minimum_budget, BudgetClass, BudgetSpec,
    SHARE_TOL,
};
pub use savings::{billing_savings_report, game_payments, variance, SavingsReport};
