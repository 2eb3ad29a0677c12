//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::*;
use drgame::allocation::{
    allocation_nash_equilibrium, best_response_oracle, random_simplex_point, revenue_given_allocation,
};
use drgame::asymptotics::{min_company_ratio, sweep_periods, SymmetricBase};
use drgame::distributed::{privacy_audit, run_algorithm1, InitPolicy, RunConfig};
use drgame::equilibrium::{
    consumer_best_response, equilibrium_prices_closed_form, minimum_budget, stackelberg_equilibrium_with,
};
use drgame::studio::{billing_savings_report, CaseStudyConfig};
use drgame::{Company, Consumer, Execution, PriceSchedule, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRICE_ORACLE_TOL: f64 = 1e-9;
const PRICE_ORACLE_SECONDS: f64 = 10.0;
const IDENTITY_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-9;
const BOUNDARY_STEP: f64 = 1e-6;
const OPTIMALITY_TOL: f64 = 1e-6;
const ALLOCATION_TOL: f64 = 1e-9;
/// Relative floating-point slack on "no deviation gains"; a single company
/// earns exactly `B` under every split, up to rounding.
const DEVIATION_SLACK: f64 = 1e-12;
const ITER_TOL: f64 = 1e-8;
const ITER_MAX_ROUNDS: usize = 10_000;
const ITER_GAP_FACTOR: f64 = 10.0;
const FIXTURE_TOL: f64 = 1e-3;
const FIXTURE_MAX_ROUNDS: usize = 5;
const SWEEP_LIMIT_TOL: f64 = 0.005;
const REVENUE_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-12;
const DUTCH_MIN_SAVINGS: f64 = 0.30;
const DUTCH_BUDGET: f64 = 1.1;
const ECOGRID_BUDGET: f64 = 7.6;
const ECOGRID_MAX_SAVINGS: f64 = 0.35;
const BUDGET_BAND: f64 = 0.20;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn scenarios_500() -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..500).map(|_| random_scenario(&mut rng)).collect()
}

fn c1_price_oracle(scenarios: &[Scenario]) -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in scenarios {
        let closed = equilibrium_prices_closed_form(s).expect("closed form");
        let reference = reference_prices(s);
        for (row, rrow) in closed.rows().iter().zip(&reference) {
            for (&p, &q) in row.iter().zip(rrow) {
                worst = worst.max(rel_err(p, q));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < PRICE_ORACLE_TOL && secs < PRICE_ORACLE_SECONDS,
        format!(
            "max rel err {worst:.2e} (< {PRICE_ORACLE_TOL:.0e}) over {} scenarios in {secs:.2} s (< {PRICE_ORACLE_SECONDS} s)",
            scenarios.len()
        ),
    )
}

/// Worst budget, capacity and revenue residuals of one equilibrium,
/// recomputed from its demands.
fn identity_residuals(s: &Scenario) -> (bool, [f64; 3]) {
    let eq = stackelberg_equilibrium_with(s, Execution::Sequential).expect("equilibrium");
    let (mut budget, mut capacity) = (0.0f64, 0.0f64);
    for (n, c) in s.consumers.iter().enumerate() {
        let paid: f64 = eq
            .demands
            .consumer(n)
            .iter()
            .zip(eq.prices.rows())
            .flat_map(|(d, p)| d.iter().zip(p).map(|(d, p)| d * p))
            .sum();
        budget = budget.max(rel_err(paid, c.budget));
    }
    for (k, c) in s.companies.iter().enumerate() {
        for (t, &g) in c.capacity.iter().enumerate() {
            let agg: f64 = (0..s.consumers.len()).map(|n| eq.demands.consumer(n)[k][t]).sum();
            capacity = capacity.max(rel_err(agg, g));
        }
    }
    let total_b: f64 = s.consumers.iter().map(|c| c.budget).sum();
    let revenue = rel_err(eq.revenues.iter().sum(), total_b);
    (eq.flags.identities_apply(), [budget, capacity, revenue])
}

fn c2_identities(scenarios: &[Scenario]) -> Verdict {
    let mut clean = [0.0f64; 3];
    let mut flagged_worst = [0.0f64; 3];
    let mut flagged = 0;
    for s in scenarios {
        let (applies, r) = identity_residuals(s);
        let target = if applies { &mut clean } else { &mut flagged_worst };
        for i in 0..3 {
            target[i] = target[i].max(r[i]);
        }
        flagged += usize::from(!applies);
    }
    let checked = scenarios.len() - flagged;
    let flagged_max = flagged_worst.iter().cloned().fold(0.0, f64::max);
    verdict(
        clean.iter().all(|&x| x < IDENTITY_TOL) && checked > 0,
        format!(
            "budget {:.2e}, capacity {:.2e}, revenue {:.2e} (each < {IDENTITY_TOL:.0e}) on {checked} unflagged; \
             flag rate {:.1}% (worst residual on flagged {flagged_max:.2e})",
            clean[0],
            clean[1],
            clean[2],
            100.0 * flagged as f64 / scenarios.len() as f64
        ),
    )
}

fn c3_minimum_budget() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut at, mut below_ok, mut above_ok, mut done, mut resampled) = (0.0f64, true, true, 0, 0);
    while done < 200 {
        let k = rng.gen_range(1..=4);
        let t = rng.gen_range(1..=6);
        let prices = PriceSchedule((0..k).map(|_| (0..t).map(|_| rng.gen_range(0.05..2.0)).collect()).collect());
        let mut c = Consumer {
            id: "c".into(),
            budget: 0.0,
            energy_min: rng.gen_range(1.0..100.0),
            gamma: 1.0,
            zeta: rng.gen_range(1.0..3.0),
        };
        let b = minimum_budget(&c, &prices).unwrap();
        if b <= 0.0 {
            resampled += 1;
            continue;
        }
        done += 1;
        let total = |c: &Consumer| consumer_best_response(c, &prices).unwrap().total();
        c.budget = b;
        at = at.max((total(&c) - c.energy_min).abs() / c.energy_min);
        c.budget = b * (1.0 - BOUNDARY_STEP);
        below_ok &= total(&c) < c.energy_min;
        c.budget = b * (1.0 + BOUNDARY_STEP);
        above_ok &= total(&c) >= c.energy_min;
    }
    verdict(
        at < BOUNDARY_TOL && below_ok && above_ok,
        format!(
            "|demand - E_min| rel {at:.2e} (< {BOUNDARY_TOL:.0e}); B(1-1e-6) short: {below_ok}; \
             B(1+1e-6) meets: {above_ok}; 200 instances ({resampled} resampled for B_min <= 0)"
        ),
    )
}

fn c4_consumer_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let k = rng.gen_range(1..=3);
        let t = rng.gen_range(1..=6 / k);
        let rows: Vec<Vec<f64>> = (0..k).map(|_| (0..t).map(|_| rng.gen_range(0.05..5.0)).collect()).collect();
        let flat_p: Vec<f64> = rows.iter().flatten().copied().collect();
        let cells = flat_p.len() as f64;
        let zeta = rng.gen_range(1.0..3.0);
        let sum_p: f64 = flat_p.iter().sum();
        let p_max = flat_p.iter().cloned().fold(0.0, f64::max);
        // Smallest budget with every closed-form cell nonnegative.
        let interior = zeta * (cells * p_max - sum_p);
        let mut c = Consumer {
            id: "c".into(),
            budget: interior + rng.gen_range(0.1..50.0),
            energy_min: 0.0,
            gamma: rng.gen_range(0.5..2.0),
            zeta,
        };
        let prices = PriceSchedule(rows);
        let br = consumer_best_response(&c, &prices).unwrap();
        c.energy_min = rng.gen_range(0.0..1.0) * br.total();
        let closed: Vec<f64> = br.demands.iter().flatten().copied().collect();
        let u_closed = log_utility(&c, &closed);
        let reference = water_filling(&c, &flat_p);
        assert!(reference.iter().sum::<f64>() >= c.energy_min - 1e-9);
        worst = worst.max(log_utility(&c, &reference) - u_closed);
        // Random feasible points on the budget surface.
        for _ in 0..200 {
            let w = random_simplex_point(&mut rng, flat_p.len(), c.budget);
            let d: Vec<f64> = w.iter().zip(&flat_p).map(|(s, p)| s / p).collect();
            if d.iter().sum::<f64>() >= c.energy_min {
                worst = worst.max(log_utility(&c, &d) - u_closed);
            }
        }
    }
    verdict(
        worst <= OPTIMALITY_TOL,
        format!("best reference advantage {worst:.2e} (<= {OPTIMALITY_TOL:.0e}) over 100 instances"),
    )
}

fn c5_allocation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut oracle_gap, mut deviation_gain, mut concave) = (0.0f64, f64::NEG_INFINITY, true);
    let mut second_diffs = 0;
    for i in 0..50 {
        let k = rng.gen_range(1..=3);
        let t = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=20);
        let consumers: Vec<Consumer> = (0..n)
            .map(|j| Consumer::unit(format!("c{j}"), rng.gen_range(0.5..10.0), 0.0))
            .collect();
        let companies: Vec<Company> = (0..k)
            .map(|j| {
                let total = log_uniform(&mut rng, 1.0, 1e3);
                Company::new(format!("g{j}"), vec![total / t as f64; t]).with_total_capacity(total)
            })
            .collect();
        let s = Scenario::new(t, consumers, companies);
        let ne = allocation_nash_equilibrium(&s).unwrap();
        let b = s.aggregate_b();
        let nf = n as f64;
        for j in 0..k {
            let u_ne = revenue_given_allocation(j, &ne, &s).unwrap();
            let u_ref = reference_revenue(j, &ne.allocations, nf, b);
            oracle_gap = oracle_gap.max(rel_err(u_ne, u_ref));
            let br = best_response_oracle(j, &ne, &s, 50, 100 + i as u64, Execution::Sequential).unwrap();
            let mut alloc = ne.allocations.clone();
            alloc[j] = br;
            let u_br = reference_revenue(j, &alloc, nf, b);
            oracle_gap = oracle_gap.max((u_br - u_ne) / u_ne.abs());
            oracle_gap = oracle_gap.max(rel_err(u_br, u_ne));
            for _ in 0..1000 {
                let mut alloc = ne.allocations.clone();
                alloc[j] = random_simplex_point(&mut rng, t, ne.totals[j]);
                deviation_gain = deviation_gain.max((reference_revenue(j, &alloc, nf, b) - u_ne) / u_ne);
            }
        }
        // Concavity in own allocation needs a rival (one company earns B regardless).
        if k >= 2 {
            for _ in 0..2 {
                let alloc: Vec<Vec<f64>> = ne
                    .allocations
                    .iter()
                    .map(|r| r.iter().map(|&g| g * rng.gen_range(0.2..1.8)).collect())
                    .collect();
                let j = rng.gen_range(0..k);
                let tt = rng.gen_range(0..t);
                let h = 0.25 * alloc[j][tt];
                let at = |delta: f64| {
                    let mut a = alloc.clone();
                    a[j][tt] += delta;
                    reference_revenue(j, &a, nf, b)
                };
                let d2 = at(h) - 2.0 * at(0.0) + at(-h);
                concave &= d2 < 0.0;
                second_diffs += 1;
            }
        }
    }
    // Top up to 100 interior points on two- and three-company markets.
    while second_diffs < 100 {
        let k = rng.gen_range(2..=3);
        let t = rng.gen_range(1..=3);
        let nf = rng.gen_range(1..=20) as f64;
        let b = rng.gen_range(1.0..100.0);
        let alloc: Vec<Vec<f64>> = (0..k).map(|_| (0..t).map(|_| log_uniform(&mut rng, 0.1, 1e3)).collect()).collect();
        let (j, tt) = (rng.gen_range(0..k), rng.gen_range(0..t));
        let h = 0.25 * alloc[j][tt];
        let at = |delta: f64| {
            let mut a = alloc.clone();
            a[j][tt] += delta;
            reference_revenue(j, &a, nf, b)
        };
        concave &= at(h) - 2.0 * at(0.0) + at(-h) < 0.0;
        second_diffs += 1;
    }
    verdict(
        oracle_gap <= ALLOCATION_TOL && deviation_gain <= DEVIATION_SLACK && concave,
        format!(
            "uniform vs oracle {oracle_gap:.2e} (<= {ALLOCATION_TOL:.0e}); best of 1000 deviations {deviation_gain:.2e} (<= {DEVIATION_SLACK:.0e}); \
             {second_diffs} second differences negative: {concave}"
        ),
    )
}

fn c6_distributed() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_gap, mut worst_rounds, mut all_ok, mut runs) = (0.0f64, 0usize, true, 0);
    let mut notes = Vec::new();
    for _ in 0..100 {
        let s = random_market_scenario(&mut rng);
        for delta in [0.0, 10.0, 1e3] {
            let cfg = RunConfig {
                delta,
                tol: ITER_TOL,
                max_rounds: ITER_MAX_ROUNDS,
                exec: Execution::Sequential,
                ..RunConfig::default()
            };
            let trace = run_algorithm1(&s, &cfg).unwrap();
            runs += 1;
            let gap = max_gap_to_reference(&s, &trace.final_prices);
            let ok = trace.converged()
                && gap <= ITER_GAP_FACTOR * ITER_TOL
                && trace.prices_stayed_positive()
                && privacy_audit(&trace, &s).passed;
            if !ok && notes.len() < 3 {
                notes.push(format!("delta {delta}: {:?} gap {gap:.2e}", trace.outcome));
            }
            all_ok &= ok;
            worst_gap = worst_gap.max(gap);
            worst_rounds = worst_rounds.max(trace.rounds.len());
        }
    }

    let cfg = CaseStudyConfig::load(fixtures().join("ecogrid_k4.toml")).unwrap();
    let series = cfg.series().unwrap();
    let base = cfg.scenario(&series).unwrap();
    let dist = cfg.distributed.clone().unwrap();
    let fixture = dist.scenario(&base).unwrap();
    let run = |delta: f64| {
        let cfg = RunConfig {
            delta,
            tol: FIXTURE_TOL,
            max_rounds: 100,
            init: InitPolicy::Uniform(1.0),
            allow_negative_delta: delta < 0.0,
            ..RunConfig::default()
        };
        run_algorithm1(&fixture, &cfg).unwrap()
    };
    let fast = run(1e3);
    let fast_gap = max_gap_to_reference(&fixture, &fast.final_prices);
    let fast_ok = fast.converged()
        && fast.rounds.len() <= FIXTURE_MAX_ROUNDS
        && fast_gap <= ITER_GAP_FACTOR * FIXTURE_TOL
        && fast.prices_stayed_positive()
        && privacy_audit(&fast, &fixture).passed;
    let diverging = run(-1e4);
    let diverged = matches!(diverging.outcome, drgame::distributed::Outcome::Diverged { .. });

    verdict(
        all_ok && fast_ok && diverged,
        format!(
            "{runs} random runs converged within {:.0e} (worst gap {worst_gap:.2e}, max {worst_rounds} rounds); \
             fixture delta=1e3: {} rounds (<= {FIXTURE_MAX_ROUNDS}), gap {fast_gap:.2e}; fixture delta=-1e4 diverged: {diverged}{}",
            ITER_GAP_FACTOR * ITER_TOL,
            fast.rounds.len(),
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

/// `max |p - p_ref| / max(1, |p_ref|)` against the test-local price solve.
fn max_gap_to_reference(s: &Scenario, prices: &PriceSchedule) -> f64 {
    let reference = reference_prices(s);
    prices
        .rows()
        .iter()
        .zip(&reference)
        .flat_map(|(r, q)| r.iter().zip(q).map(|(p, q)| (p - q).abs() / q.abs().max(1.0)))
        .fold(0.0, f64::max)
}

fn c7_asymptotics() -> Verdict {
    let (k, g_total) = (2usize, 100.0);
    let budgets = vec![1.0; 100];
    let base = SymmetricBase::new(k, g_total, budgets.clone());
    let ts: Vec<usize> = (1..=512).collect();
    let sweep = sweep_periods(&base, &ts, Execution::default()).unwrap();
    let sum_b: f64 = budgets.iter().sum();

    // Utilities and revenues recomputed through the general equilibrium.
    let mut utilities = Vec::with_capacity(ts.len());
    let mut revenue_dev: f64 = 0.0;
    for &t in &ts {
        let s = base.scenario(t, &budgets).unwrap();
        let eq = stackelberg_equilibrium_with(&s, Execution::Sequential).unwrap();
        utilities.push(eq.consumer_utilities[0]);
        for &r in &eq.revenues {
            revenue_dev = revenue_dev.max(rel_err(r, sum_b / k as f64));
        }
    }
    let increasing = utilities.windows(2).all(|w| w[1] > w[0])
        && sweep.points.windows(2).all(|w| w[1].user_utility > w[0].user_utility);
    let limit = k as f64 * g_total * budgets[0] / sum_b;
    let limit_err = (utilities[511] - limit).abs() / limit;

    let mut boundary: f64 = 0.0;
    for (b, p_max, t, g_star) in [(8.0, 2.0, 1usize, 4.0), (6.0, 0.5, 3, 2.0), (3.0, 0.75, 2, 1.0)] {
        let ratio = min_company_ratio(b, p_max, t, g_star).unwrap();
        // Smallest N with an integral K = ratio * N.
        let n = (1..=64).find(|&n| ((ratio * n as f64) - (ratio * n as f64).round()).abs() < 1e-12).unwrap();
        let kk = (ratio * n as f64).round() as usize;
        let s = Scenario::new(
            t,
            (0..n).map(|i| Consumer::unit(format!("c{i}"), b, 0.0)).collect(),
            (0..kk).map(|j| Company::new(format!("g{j}"), vec![g_star; t])).collect(),
        );
        let p = equilibrium_prices_closed_form(&s).unwrap();
        for (_, _, price) in p.cells() {
            boundary = boundary.max(rel_err(price, p_max));
        }
    }
    verdict(
        increasing && limit_err < SWEEP_LIMIT_TOL && revenue_dev < REVENUE_TOL && boundary < RATIO_TOL,
        format!(
            "U(T) strictly increasing on 1..512: {increasing}; |U(512) - limit| rel {limit_err:.3e} (< {SWEEP_LIMIT_TOL}); \
             revenue dev {revenue_dev:.1e} (< {REVENUE_TOL:.0e}); ratio boundary p* vs p_max {boundary:.1e} (< {RATIO_TOL:.0e})"
        ),
    )
}

fn c8_case_studies() -> Verdict {
    let run = |name: &str| {
        let cfg = CaseStudyConfig::load(fixtures().join(name)).unwrap();
        let series = cfg.series().unwrap();
        let s = cfg.scenario(&series).unwrap();
        let eq = stackelberg_equilibrium_with(&s, Execution::default()).unwrap();
        (s.consumers[0].budget, billing_savings_report(&series, &eq).unwrap())
    };
    let (dutch_b, dutch) = run("dutch.toml");
    let (eco_b, eco) = run("ecogrid.toml");
    let within = |b: f64, target: f64| (b - target).abs() <= BUDGET_BAND * target;
    let dutch_ok = dutch.savings_fraction > DUTCH_MIN_SAVINGS
        && within(dutch_b, DUTCH_BUDGET)
        && dutch.game_price_variance < dutch.experimental_price_variance;
    let eco_ok = eco.savings_fraction > 0.0
        && eco.savings_fraction <= ECOGRID_MAX_SAVINGS
        && within(eco_b, ECOGRID_BUDGET)
        && eco.game_price_variance < eco.experimental_price_variance;
    verdict(
        dutch_ok && eco_ok,
        format!(
            "dutch: savings {:.3} (> {DUTCH_MIN_SAVINGS}), B {dutch_b:.3} EUR (1.1 +/- 20%), var {:.2e} < {:.2e}; \
             ecogrid: savings {:.3} (0, {ECOGRID_MAX_SAVINGS}], B {eco_b:.3} DKK (7.6 +/- 20%), var {:.2e} < {:.2e}",
            dutch.savings_fraction,
            dutch.game_price_variance,
            dutch.experimental_price_variance,
            eco.savings_fraction,
            eco.game_price_variance,
            eco.experimental_price_variance
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c9_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_drgame");
    let work = tempfile::tempdir().unwrap();
    let scenario = work.path().join("scenario.json");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    std::fs::write(&scenario, random_market_scenario(&mut rng).to_json().unwrap()).unwrap();
    let config = fixtures().join("ecogrid_k4.toml");

    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = work.path().join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let solve = Command::new(bin).arg("solve").arg(&scenario).output().unwrap();
        let iterate = Command::new(bin)
            .args(["iterate", "--seed", "42", "--out"])
            .arg(dir.join("iterate"))
            .arg(&scenario)
            .output()
            .unwrap();
        let case = Command::new(bin)
            .arg("casestudy")
            .arg(&config)
            .arg("--out")
            .arg(dir.join("case"))
            .output()
            .unwrap();
        let ok = solve.status.success() && iterate.status.success() && case.status.success();
        outputs.push((
            ok,
            solve.stdout,
            read_tree(&dir.join("iterate")),
            read_tree(&dir.join("case")),
        ));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    let same = [a.1 == b.1, a.2 == b.2, a.3 == b.3];
    verdict(
        a.0 && b.0 && same.iter().all(|&x| x),
        format!(
            "solve identical: {}, iterate --seed 42 identical: {} ({} files), casestudy identical: {} ({} files)",
            same[0],
            same[1],
            a.2.len(),
            same[2],
            a.3.len()
        ),
    )
}

fn main() {
    let scenarios = scenarios_500();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("1 price oracle equivalence", Box::new(|| c1_price_oracle(&scenarios))),
        ("2 identity suite", Box::new(|| c2_identities(&scenarios))),
        ("3 minimum-budget boundary", Box::new(c3_minimum_budget)),
        ("4 consumer optimality", Box::new(c4_consumer_optimality)),
        ("5 allocation equilibrium", Box::new(c5_allocation)),
        ("6 distributed convergence", Box::new(c6_distributed)),
        ("7 asymptotics", Box::new(c7_asymptotics)),
        ("8 case studies", Box::new(c8_case_studies)),
        ("9 determinism", Box::new(c9_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let v = check();
        println!("[{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
