use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use drgame::allocation::allocation_nash_equilibrium;
use drgame::asymptotics::{sweep_periods, sweep_population, SymmetricBase};
use drgame::distributed::{run_algorithm1, InitPolicy, Outcome, RunConfig, UpdateOrder};
use drgame::equilibrium::stackelberg_equilibrium_with;
use drgame::model::{validate_scenario, Severity};
use drgame::studio::{run_case_study, RANDOM_INIT_RANGE};
use drgame::{Error, Execution, Scenario};

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_PARSE: u8 = 4;

#[derive(Parser)]
#[command(name = "drgame", version, about = "Multi-period multi-company demand-response game")]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium prices, demands and revenues for a scenario.
    Solve {
        scenario: PathBuf,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uniform power allocation for every company.
    Allocate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distributed price iteration.
    Iterate(IterateArgs),
    /// Symmetric-market sweep over horizon or population.
    Sweep(SweepArgs),
    /// Full case-study pipeline from a TOML config.
    Casestudy {
        config: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Report scenario violations.
    Validate { scenario: PathBuf },
}

#[derive(Args)]
struct IterateArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_rounds: usize,
    #[arg(long, value_enum, default_value_t = OrderArg::Sequential)]
    order: OrderArg,
    /// Random initial prices from this seed instead of a flat start.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat initial price.
    #[arg(long, default_value_t = 1.0)]
    init: f64,
    /// Accept a negative delta (the run is expected to diverge).
    #[arg(long)]
    allow_negative_delta: bool,
    /// Directory for `trace.jsonl` and `trace_summary.json`; summary goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Sequential,
    Synchronous,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Periods,
    Population,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    values: Vec<usize>,
    #[arg(long, requires = "to")]
    from: Option<usize>,
    #[arg(long, requires = "from")]
    to: Option<usize>,
    #[arg(long, default_value_t = 1)]
    companies: usize,
    /// Total power of each company.
    #[arg(long)]
    capacity: f64,
    /// Comma-separated consumer budgets; the first is reported.
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<f64>,
    /// Horizon for the population axis.
    #[arg(long, default_value_t = 1)]
    periods: usize,
    /// Directory for `sweep.csv` and `limits.json`; CSV goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidScenario(_) => EXIT_VALIDATION,
        Error::Parse { .. } | Error::Unit(_) | Error::Json(_) | Error::Toml(_) | Error::Csv(_) => EXIT_PARSE,
        _ => EXIT_OTHER,
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> drgame::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_valid(path: &Path) -> drgame::Result<Scenario> {
    let s = Scenario::load(path)?;
    s.ensure_valid()?;
    Ok(s)
}

fn iterate(args: &IterateArgs, exec: Execution) -> drgame::Result<u8> {
    let s = load_valid(&args.scenario)?;
    let init = match args.seed {
        Some(seed) => InitPolicy::Random {
            seed,
            low: RANDOM_INIT_RANGE.0,
            high: RANDOM_INIT_RANGE.1,
        },
        None => InitPolicy::Uniform(args.init),
    };
    let cfg = RunConfig {
        delta: args.delta,
        tol: args.tol,
        max_rounds: args.max_rounds,
        order: match args.order {
            OrderArg::Sequential => UpdateOrder::Sequential,
            OrderArg::Synchronous => UpdateOrder::Synchronous,
        },
        init,
        allow_negative_delta: args.allow_negative_delta,
        record_messages: args.out.is_some(),
        exec,
    };
    let trace = run_algorithm1(&s, &cfg)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(fs::File::create(dir.join("trace.jsonl"))?);
            trace.write_jsonl(&s, &mut w)?;
            w.flush()?;
            emit_json(&trace.summary(), Some(&dir.join("trace_summary.json")))?;
        }
        None => emit_json(&trace.summary(), None)?,
    }
    Ok(match trace.outcome {
        Outcome::Converged { .. } => 0,
        Outcome::Diverged { .. } => {
            eprintln!("price iteration diverged");
            EXIT_DIVERGENCE
        }
        Outcome::CapExceeded { rounds } => {
            eprintln!("no convergence within {rounds} rounds");
            EXIT_DIVERGENCE
        }
    })
}

fn sweep(args: &SweepArgs, exec: Execution) -> drgame::Result<u8> {
    let mut base = SymmetricBase::new(args.companies, args.capacity, args.budgets.clone());
    base.periods = args.periods;
    let values: Vec<usize> = match (args.from, args.to) {
        (Some(a), Some(b)) => (a..=b).collect(),
        _ => args.values.clone(),
    };
    if values.is_empty() {
        return Err(Error::InvalidParameter("give --values or --from/--to".into()));
    }
    let result = match args.axis {
        AxisArg::Periods => sweep_periods(&base, &values, exec)?,
        AxisArg::Population => sweep_population(&base, &values, exec)?,
    };
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            result.write_csv(fs::File::create(dir.join("sweep.csv"))?)?;
            emit_json(&result.limit_values, Some(&dir.join("limits.json")))?;
        }
        None => result.write_csv(io::stdout().lock())?,
    }
    Ok(0)
}

fn run(cli: Cli) -> drgame::Result<u8> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Solve { scenario, out } => {
            let s = load_valid(&scenario)?;
            let eq = stackelberg_equilibrium_with(&s, exec)?;
            emit_json(&eq, out.as_deref())?;
            Ok(0)
        }
        Command::Allocate { scenario, out } => {
            let s = load_valid(&scenario)?;
            emit_json(&allocation_nash_equilibrium(&s)?, out.as_deref())?;
            Ok(0)
        }
        Command::Iterate(args) => iterate(&args, exec),
        Command::Sweep(args) => sweep(&args, exec),
        Command::Casestudy { config, out } => {
            let report = run_case_study(&config, &out, exec)?;
            println!(
                "{}: savings {:.4}, bundle in {}",
                report.name,
                report.savings.savings_fraction,
                out.display()
            );
            Ok(0)
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            let violations = validate_scenario(&s);
            for v in &violations {
                println!("{v}");
            }
            if violations.iter().any(|v| v.severity == Severity::Error) {
                Ok(EXIT_VALIDATION)
            } else {
                if violations.is_empty() {
                    println!("ok");
                }
                Ok(0)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::InvalidScenario(vs) = err.root() {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
