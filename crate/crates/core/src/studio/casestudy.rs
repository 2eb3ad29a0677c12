use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::{load_case_data, ExperimentSeries};
use super::derive::{
    derive_scenario_from_experiment, energy_per_consumer, experimental_minimum_budget, BudgetClass, BudgetSpec,
};
use super::savings::{billing_savings_report, game_payments, SavingsReport};
use crate::allocation::{allocation_nash_equilibrium, reallocate_uniform};
use crate::distributed::{run_algorithm1, InitPolicy, RunConfig, TraceSummary, UpdateOrder};
use crate::equilibrium::{stackelberg_equilibrium_with, EquilibriumOutcome, IdentityChecks};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{PriceSchedule, Scenario};

/// `budgets = "minimum"` or a list of `{ count, budget }` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetConfig {
    Keyword(String),
    Classes(Vec<BudgetClass>),
}

impl BudgetConfig {
    pub fn spec(&self) -> Result<BudgetSpec> {
        match self {
            BudgetConfig::Keyword(k) if k == "minimum" => Ok(BudgetSpec::Minimum),
            BudgetConfig::Keyword(k) => Err(Error::InvalidParameter(format!("unknown budget keyword `{k}`"))),
            BudgetConfig::Classes(c) => Ok(BudgetSpec::Classes(c.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// Capacities track the experimental load.
    #[default]
    Experimental,
    /// Each company spreads its total evenly over the horizon.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributedConfig {
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_order")]
    pub order: UpdateOrder,
    #[serde(default = "default_init")]
    pub init: f64,
    /// Random initial prices in `[0.1, 2.0)` instead of `init`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Re-spread every company's total over this many periods before iterating.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub allow_negative_delta: bool,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_rounds() -> usize {
    10_000
}
fn default_order() -> UpdateOrder {
    UpdateOrder::Sequential
}
fn default_init() -> f64 {
    1.0
}

pub const RANDOM_INIT_RANGE: (f64, f64) = (0.1, 2.0);

impl DistributedConfig {
    pub fn run_config(&self, exec: Execution) -> RunConfig {
        let init = match self.seed {
            Some(seed) => InitPolicy::Random {
                seed,
                low: RANDOM_INIT_RANGE.0,
                high: RANDOM_INIT_RANGE.1,
            },
            None => InitPolicy::Uniform(self.init),
        };
        RunConfig {
            delta: self.delta,
            tol: self.tol,
            max_rounds: self.max_rounds,
            order: self.order,
            init,
            allow_negative_delta: self.allow_negative_delta,
            record_messages: true,
            exec,
        }
    }

    /// Scenario the iteration runs on.
    pub fn scenario(&self, base: &Scenario) -> Result<Scenario> {
        match self.horizon {
            Some(h) if h != base.periods => reallocate_uniform(base, h),
            _ => Ok(base.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSweepConfig {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyConfig {
    pub name: String,
    /// CSV path, relative to the config file.
    pub data: PathBuf,
    pub population: usize,
    #[serde(default = "default_shares")]
    pub shares: Vec<f64>,
    pub budgets: BudgetConfig,
    #[serde(default)]
    pub allocation: AllocationMode,
    #[serde(default)]
    pub distributed: Option<DistributedConfig>,
    #[serde(default)]
    pub period_sweep: Option<PeriodSweepConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_shares() -> Vec<f64> {
    vec![1.0]
}

impl CaseStudyConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: CaseStudyConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.into();
        cfg.budgets.spec()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.data)
    }

    pub fn series(&self) -> Result<ExperimentSeries> {
        load_case_data(self.data_path(), self.population)
    }

    /// Derived scenario after the configured allocation step.
    pub fn scenario(&self, series: &ExperimentSeries) -> Result<Scenario> {
        let s = derive_scenario_from_experiment(series, &self.shares, &self.budgets.spec()?)?;
        match self.allocation {
            AllocationMode::Experimental => Ok(s),
            AllocationMode::Uniform => {
                let ne = allocation_nash_equilibrium(&s)?;
                let mut s = s;
                for (c, row) in s.companies.iter_mut().zip(ne.allocations) {
                    c.capacity = row;
                }
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedSummary {
    pub periods: usize,
    pub companies: usize,
    pub population: usize,
    pub currency: String,
    pub energy_per_consumer: f64,
    /// Minimum budget for that energy at the experimental prices.
    pub experimental_minimum_budget: f64,
    /// Distinct budgets with their consumer counts, in first-seen order.
    pub budget_classes: Vec<BudgetClass>,
    pub total_capacity: f64,
    /// Consumers whose budget is below the experimental minimum.
    pub below_experimental_minimum: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub prices: PriceSchedule,
    pub mean_price_per_period: Vec<f64>,
    pub aggregate_demand: Vec<Vec<f64>>,
    pub revenues: Vec<f64>,
    pub consumer_energy: Vec<f64>,
    pub consumer_utilities: Vec<f64>,
    pub clamped_cells: usize,
    pub negative_demand_consumers: Vec<String>,
    /// Consumers whose game demand falls short of their energy need.
    pub infeasible_at_game_prices: Vec<String>,
    pub checks: IdentityChecks,
}

impl EquilibriumSummary {
    pub fn new(eq: &EquilibriumOutcome) -> Self {
        EquilibriumSummary {
            prices: eq.prices.clone(),
            mean_price_per_period: eq.mean_price_per_period(),
            aggregate_demand: eq.demands.aggregate_board(),
            revenues: eq.revenues.clone(),
            consumer_energy: (0..eq.demands.0.len()).map(|n| eq.demands.consumer_total(n)).collect(),
            consumer_utilities: eq.consumer_utilities.clone(),
            clamped_cells: eq.flags.clamped.len(),
            negative_demand_consumers: eq.flags.negative_demand.clone(),
            infeasible_at_game_prices: eq.flags.infeasible_budget.clone(),
            checks: eq.checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSweepRow {
    pub periods: usize,
    pub revenues: Vec<f64>,
    pub total_revenue: f64,
    pub mean_utility: f64,
    pub min_utility: f64,
    pub max_utility: f64,
    pub mean_price: f64,
    pub negative_demand_consumers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedSummary {
    pub periods: usize,
    pub delta: f64,
    pub tol: f64,
    pub order: UpdateOrder,
    pub messages: usize,
    pub trace: TraceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyReport {
    pub name: String,
    pub derived: DerivedSummary,
    pub savings: SavingsReport,
    pub distributed: Option<DistributedSummary>,
    pub period_sweep: Option<Vec<PeriodSweepRow>>,
    pub files: Vec<String>,
}

fn budget_classes(s: &Scenario) -> Vec<BudgetClass> {
    let mut out: Vec<BudgetClass> = Vec::new();
    for c in &s.consumers {
        match out.iter_mut().find(|b| b.budget == c.budget) {
            Some(b) => b.count += 1,
            None => out.push(BudgetClass {
                count: 1,
                budget: c.budget,
            }),
        }
    }
    out
}

/// Equilibria over a range of horizons with every company spreading its
/// total evenly.
pub fn period_sweep(base: &Scenario, range: PeriodSweepConfig, exec: Execution) -> Result<Vec<PeriodSweepRow>> {
    if range.from == 0 || range.from > range.to {
        return Err(Error::InvalidParameter(format!(
            "period sweep range {}..={} is empty",
            range.from, range.to
        )));
    }
    let horizons: Vec<usize> = (range.from..=range.to).collect();
    exec.map_slice(&horizons, |&t| {
        let s = reallocate_uniform(base, t)?;
        let eq = stackelberg_equilibrium_with(&s, Execution::Sequential)?;
        let u = &eq.consumer_utilities;
        let mean_price = eq.mean_price_per_period().iter().sum::<f64>() / t as f64;
        Ok(PeriodSweepRow {
            periods: t,
            total_revenue: eq.revenues.iter().sum(),
            revenues: eq.revenues,
            mean_utility: u.iter().sum::<f64>() / u.len() as f64,
            min_utility: u.iter().copied().fold(f64::INFINITY, f64::min),
            max_utility: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_price,
            negative_demand_consumers: eq.flags.negative_demand.len(),
        })
    })
    .into_iter()
    .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_series_csv(path: &Path, series: &ExperimentSeries, s: &Scenario, eq: &EquilibriumOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "period".to_string(),
        "experimental_price".into(),
        "game_price".into(),
        "experimental_load".into(),
        "game_demand".into(),
        "experimental_payment".into(),
        "game_payment".into(),
        "cumulative_experimental".into(),
        "cumulative_game".into(),
    ];
    header.extend(s.companies.iter().map(|c| format!("price_{}", c.id)));
    w.write_record(&header)?;
    let game_price = eq.mean_price_per_period();
    let agg = eq.demands.aggregate_board();
    let payments = game_payments(eq);
    let (mut cum_exp, mut cum_game) = (0.0, 0.0);
    for t in 0..series.periods {
        let demand: f64 = agg.iter().map(|r| r[t]).sum();
        let exp_pay = series.prices[t] * series.loads[t];
        cum_exp += exp_pay;
        cum_game += payments[t];
        let mut row = vec![
            (t + 1).to_string(),
            series.prices[t].to_string(),
            game_price[t].to_string(),
            series.loads[t].to_string(),
            demand.to_string(),
            exp_pay.to_string(),
            payments[t].to_string(),
            cum_exp.to_string(),
            cum_game.to_string(),
        ];
        row.extend(eq.prices.rows().iter().map(|p| p[t].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_sweep_csv(path: &Path, rows: &[PeriodSweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "periods",
        "total_revenue",
        "mean_utility",
        "min_utility",
        "max_utility",
        "mean_price",
        "negative_demand_consumers",
    ])?;
    for r in rows {
        w.write_record([
            r.periods.to_string(),
            r.total_revenue.to_string(),
            r.mean_utility.to_string(),
            r.min_utility.to_string(),
            r.max_utility.to_string(),
            r.mean_price.to_string(),
            r.negative_demand_consumers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Loads the config, runs every stage and writes the report bundle into `out_dir`.
pub fn run_case_study(config_path: impl AsRef<Path>, out_dir: impl AsRef<Path>, exec: Execution) -> Result<CaseStudyReport> {
    let cfg = staged("config", CaseStudyConfig::load(config_path))?;
    run_case_study_with(&cfg, out_dir, exec)
}

pub fn run_case_study_with(cfg: &CaseStudyConfig, out_dir: impl AsRef<Path>, exec: Execution) -> Result<CaseStudyReport> {
    let out = out_dir.as_ref();
    let series = staged("load", cfg.series())?;
    let s = staged("derive", cfg.scenario(&series))?;
    let energy = energy_per_consumer(&series);
    let b_min = staged("derive", experimental_minimum_budget(&series, s.k(), energy))?;
    let derived = DerivedSummary {
        periods: s.periods,
        companies: s.k(),
        population: s.n(),
        currency: series.currency.clone(),
        energy_per_consumer: energy,
        experimental_minimum_budget: b_min,
        budget_classes: budget_classes(&s),
        total_capacity: s.companies.iter().map(|c| c.total()).sum(),
        below_experimental_minimum: s
            .consumers
            .iter()
            .filter(|c| c.budget < b_min * (1.0 - crate::equilibrium::IDENTITY_TOL))
            .count(),
    };
    let eq = staged("equilibrium", stackelberg_equilibrium_with(&s, exec))?;
    let savings = staged("savings", billing_savings_report(&series, &eq))?;

    let distributed = match &cfg.distributed {
        Some(d) => {
            let ds = staged("distributed", d.scenario(&s))?;
            let trace = staged("distributed", run_algorithm1(&ds, &d.run_config(exec)))?;
            staged("write", fs::create_dir_all(out).map_err(Error::from))?;
            let file = staged("write", fs::File::create(out.join("trace.jsonl")).map_err(Error::from))?;
            let mut w = BufWriter::new(file);
            staged("write", trace.write_jsonl(&ds, &mut w))?;
            staged("write", w.flush().map_err(Error::from))?;
            Some(DistributedSummary {
                periods: ds.periods,
                delta: d.delta,
                tol: d.tol,
                order: d.order,
                messages: trace.messages.len(),
                trace: trace.summary(),
            })
        }
        None => None,
    };
    let sweep = match cfg.period_sweep {
        Some(range) => Some(staged("sweep", period_sweep(&s, range, exec))?),
        None => None,
    };

    let mut files = vec!["equilibrium.json", "savings.json", "series.csv"];
    let written: Result<()> = (|| {
        fs::create_dir_all(out)?;
        write_json(&out.join("equilibrium.json"), &EquilibriumSummary::new(&eq))?;
        write_json(&out.join("savings.json"), &savings)?;
        write_series_csv(&out.join("series.csv"), &series, &s, &eq)?;
        if let Some(d) = &distributed {
            write_json(&out.join("trace_summary.json"), d)?;
        }
        if let Some(rows) = &sweep {
            write_sweep_csv(&out.join("period_sweep.csv"), rows)?;
        }
        Ok(())
    })();
    staged("write", written)?;
    if distributed.is_some() {
        files.extend(["trace.jsonl", "trace_summary.json"]);
    }
    if sweep.is_some() {
        files.push("period_sweep.csv");
    }
    files.push("report.json");
    let report = CaseStudyReport {
        name: cfg.name.clone(),
        derived,
        savings,
        distributed,
        period_sweep: sweep,
        files: files.into_iter().map(String::from).collect(),
    };
    staged("write", write_json(&out.join("report.json"), &report))?;
    Ok(report)
}
