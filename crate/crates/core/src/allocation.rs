//! Power-allocation game between companies.
//!
//! Each company splits its total power `G_total` across the `T` periods.
//! With `zeta = gamma = 1` (so `Z = N`) its revenue at the price equilibrium is
//!
//! ```text
//! U_k = B sum_t G_k(t) / ((G_k(t) + N) (K T - sum_{j,s} N / (G_j(s) + N)))
//! ```
//!
//! Writing `f = sum_t G_k(t)/(G_k(t)+N)` and `r` for the same sum over the
//! rivals, the denominator is `f + r` and `U_k = B f / (f + r)`: increasing
//! and strictly concave in each `G_k(t)` whenever `r > 0`. The unique
//! equilibrium is the uniform split `G_total / T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{Company, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationProfile {
    /// `K x T` allocations.
    pub allocations: Vec<Vec<f64>>,
    /// Row sums.
    pub totals: Vec<f64>,
}

impl AllocationProfile {
    pub fn new(allocations: Vec<Vec<f64>>) -> Self {
        let totals = allocations.iter().map(|r| r.iter().sum()).collect();
        AllocationProfile {
            allocations,
            totals,
        }
    }

    /// The capacities currently in the scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self::new(s.capacity_board())
    }

    /// Same profile with company `k`'s row replaced.
    pub fn with_row(&self, k: usize, row: Vec<f64>) -> Self {
        let mut rows = self.allocations.clone();
        rows[k] = row;
        Self::new(rows)
    }
}

fn ensure_unit_preference(s: &Scenario) -> Result<()> {
    match s.consumers.iter().find(|c| c.zeta != 1.0 || c.gamma != 1.0) {
        Some(c) => Err(Error::ZetaNotUniform(c.id.clone())),
        None => Ok(()),
    }
}

/// `sum_t g/(g+N)` over one row.
fn share_sum(row: &[f64], n: f64) -> f64 {
    row.iter().map(|&g| g / (g + n)).sum()
}

/// Revenue of company `k` at the price equilibrium induced by `alloc`.
pub fn revenue_given_allocation(k: usize, alloc: &AllocationProfile, s: &Scenario) -> Result<f64> {
    ensure_unit_preference(s)?;
    let rows = &alloc.allocations;
    if k >= rows.len() {
        return Err(Error::InvalidParameter(format!("company index {k} out of range")));
    }
    if rows.iter().flatten().any(|&g| !(g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter("allocations must be finite and >= 0".into()));
    }
    let n = s.n() as f64;
    // K T - sum N/(G+N), accumulated as sum G/(G+N).
    let denom: f64 = rows.iter().map(|r| share_sum(r, n)).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    let b = s.aggregate_b();
    Ok(rows[k].iter().map(|&g| b * g / ((g + n) * denom)).sum())
}

/// Uniform split `G_total / T` for every company.
pub fn allocation_nash_equilibrium(s: &Scenario) -> Result<AllocationProfile> {
    ensure_unit_preference(s)?;
    if s.periods == 0 {
        return Err(Error::InvalidParameter("periods must be >= 1".into()));
    }
    let rows = s
        .companies
        .iter()
        .map(|c| {
            let total = c.total();
            if total > 0.0 && total.is_finite() {
                Ok(vec![total / s.periods as f64; s.periods])
            } else {
                Err(Error::NonPositiveInput("total_capacity"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AllocationProfile::new(rows))
}

/// Scenario re-horizoned to `periods` slots with every company at its
/// uniform-split allocation. Price bounds must be constant over time (or
/// absent) unless the horizon is unchanged.
pub fn reallocate_uniform(s: &Scenario, periods: usize) -> Result<Scenario> {
    if periods == 0 {
        return Err(Error::InvalidParameter("periods must be >= 1".into()));
    }
    let rebound = |b: &Vec<f64>| -> Result<Vec<f64>> {
        if b.is_empty() || periods == s.periods {
            return Ok(b.clone());
        }
        if b.iter().all(|&x| x == b[0]) {
            Ok(vec![b[0]; periods])
        } else {
            Err(Error::Shape("time-varying price bounds cannot be re-horizoned".into()))
        }
    };
    let companies = s
        .companies
        .iter()
        .map(|c| {
            let total = c.total();
            Ok(Company {
                id: c.id.clone(),
                capacity: vec![total / periods as f64; periods],
                price_min: rebound(&c.price_min)?,
                price_max: rebound(&c.price_max)?,
                total_capacity: total,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario::new(periods, s.consumers.clone(), companies))
}

/// Upper bound on periods the best-response oracle accepts.
pub const ORACLE_MAX_PERIODS: usize = 4;
const RESTARTS: usize = 16;
const MAX_ITERS: usize = 10_000;
const INITIAL_STEP: f64 = 1e-2;
/// Grid search is used to seed the ascent only up to this many periods.
const GRID_MAX_PERIODS: usize = 3;

/// Euclidean projection onto `{x >= 0, sum x = total}`.
pub fn project_to_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - total) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

struct BestResponseProblem<'a> {
    k: usize,
    rivals: &'a AllocationProfile,
    scenario: &'a Scenario,
    n: f64,
    b: f64,
    /// Rivals' `sum G/(G+N)`.
    rival_share: f64,
    total: f64,
}

impl BestResponseProblem<'_> {
    /// Revenue when rivals are present. Without rivals revenue is the
    /// constant `B`; ties are then broken by `f`, the ordering revenue
    /// induces as `r -> 0+`.
    fn objective(&self, row: &[f64]) -> f64 {
        if self.rival_share > 0.0 {
            revenue_given_allocation(self.k, &self.rivals.with_row(self.k, row.to_vec()), self.scenario)
                .unwrap_or(f64::NEG_INFINITY)
        } else {
            share_sum(row, self.n)
        }
    }

    fn gradient(&self, row: &[f64]) -> Vec<f64> {
        let n = self.n;
        if self.rival_share > 0.0 {
            let f = share_sum(row, n);
            let r = self.rival_share;
            let scale = self.b * r / ((f + r) * (f + r));
            row.iter().map(|&g| scale * n / ((g + n) * (g + n))).collect()
        } else {
            row.iter().map(|&g| n / ((g + n) * (g + n))).collect()
        }
    }

    /// Projected gradient ascent with backtracking from `start`.
    fn ascend(&self, start: Vec<f64>) -> (Vec<f64>, f64) {
        let mut x = project_to_simplex(&start, self.total);
        let mut fx = self.objective(&x);
        let mut step = INITIAL_STEP * self.total;
        let min_step = 1e-15 * self.total.max(1.0);
        for _ in 0..MAX_ITERS {
            let grad = self.gradient(&x);
            let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if gmax == 0.0 {
                break;
            }
            let mut improved = false;
            while step >= min_step {
                let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi / gmax).collect();
                let cand = project_to_simplex(&trial, self.total);
                let fc = self.objective(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    step = (step * 1.5).min(self.total);
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (x, fx)
    }

    fn grid_start(&self, resolution: usize, periods: usize) -> Vec<f64> {
        let mut best = (f64::NEG_INFINITY, vec![self.total / periods as f64; periods]);
        let mut point = vec![0usize; periods];
        fn visit(
            p: &BestResponseProblem,
            idx: usize,
            left: usize,
            res: usize,
            point: &mut Vec<usize>,
            best: &mut (f64, Vec<f64>),
        ) {
            if idx + 1 == point.len() {
                point[idx] = left;
                let row: Vec<f64> = point.iter().map(|&i| p.total * i as f64 / res as f64).collect();
                let v = p.objective(&row);
                if v > best.0 {
                    *best = (v, row);
                }
                return;
            }
            for i in 0..=left {
                point[idx] = i;
                visit(p, idx + 1, left - i, res, point, best);
            }
        }
        visit(self, 0, resolution, resolution, &mut point, &mut best);
        best.1
    }
}

/// Random point on the simplex (flat Dirichlet).
pub fn random_simplex_point<R: Rng>(rng: &mut R, periods: usize, total: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..periods).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| total * x / s).collect()
}

/// Numerically maximizes company `k`'s revenue over `{sum_t g = G_total, g >= 0}`
/// with rivals fixed at `rivals`.
///
/// Runs projected-gradient ascent from 16 seeded random starts plus, for
/// `T <= 3`, the best point of a grid with `grid_resolution` steps per axis,
/// and returns the best result. Restarts run under `exec`; the result is
/// deterministic for a given `seed`.
pub fn best_response_oracle(
    k: usize,
    rivals: &AllocationProfile,
    s: &Scenario,
    grid_resolution: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    ensure_unit_preference(s)?;
    let periods = s.periods;
    if periods > ORACLE_MAX_PERIODS {
        return Err(Error::ScaleTooLarge(periods));
    }
    if grid_resolution < 10 {
        return Err(Error::InvalidParameter("grid_resolution must be >= 10".into()));
    }
    let company = s
        .companies
        .get(k)
        .ok_or_else(|| Error::InvalidParameter(format!("company index {k} out of range")))?;
    let total = company.total();
    if !(total > 0.0) {
        return Err(Error::NonPositiveInput("total_capacity"));
    }
    if periods == 1 {
        return Ok(vec![total]);
    }
    let n = s.n() as f64;
    let rival_share = rivals
        .allocations
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, r)| share_sum(r, n))
        .sum();
    let problem = BestResponseProblem {
        k,
        rivals,
        scenario: s,
        n,
        b: s.aggregate_b(),
        rival_share,
        total,
    };

    let mut starts: Vec<Vec<f64>> = (0..RESTARTS)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            random_simplex_point(&mut rng, periods, total)
        })
        .collect();
    if periods <= GRID_MAX_PERIODS {
        starts.push(problem.grid_start(grid_resolution, periods));
    }
    let results = exec.map_slice(&starts, |x0| problem.ascend(x0.clone()));
    let (best, _) = results
        .into_iter()
        .fold((Vec::new(), f64::NEG_INFINITY), |acc, (x, v)| if v > acc.1 { (x, v) } else { acc });
    Ok(best)
}
