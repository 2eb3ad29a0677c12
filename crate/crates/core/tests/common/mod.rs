//! Scenario generators and reference computations used by several test targets.
//! The reference computations are written from the model definitions and do
//! not call into the library's solvers.

#![allow(dead_code)]

use drgame::{Company, Consumer, PriceSchedule, Scenario};
use rand::Rng;

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// `K, T in [1, 6]`, `N in [1, 100]`, `G, B` uniform over `[0.1, 1e3]`,
/// `zeta in [1, 3]`, `gamma in [0.5, 2]`.
pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let k = rng.gen_range(1..=6);
    let t = rng.gen_range(1..=6);
    let n = rng.gen_range(1..=100);
    let consumers = (0..n)
        .map(|i| Consumer {
            id: format!("c{i}"),
            budget: rng.gen_range(0.1..1e3),
            energy_min: 0.0,
            gamma: rng.gen_range(0.5..2.0),
            zeta: rng.gen_range(1.0..3.0),
        })
        .collect();
    let companies = (0..k)
        .map(|j| Company::new(format!("g{j}"), (0..t).map(|_| rng.gen_range(0.1..1e3)).collect()))
        .collect();
    Scenario::new(t, consumers, companies)
}

/// Scenario sized for the distributed iteration: `K, T <= 4`, `N <= 50`,
/// `zeta = 1`, capacities in `[200, 1000]`, budgets in `[0.1, 5]`.
pub fn random_market_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let k = rng.gen_range(1..=4);
    let t = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=50);
    let consumers = (0..n)
        .map(|i| Consumer::unit(format!("c{i}"), rng.gen_range(0.1..5.0), 0.0))
        .collect();
    let companies = (0..k)
        .map(|j| Company::new(format!("g{j}"), (0..t).map(|_| rng.gen_range(200.0..1000.0)).collect()))
        .collect();
    Scenario::new(t, consumers, companies)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut y: Vec<f64>) -> Vec<f64> {
    let n = y.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        y.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                y[row] -= f * y[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (y[row] - s) / a[row][row];
    }
    x
}

/// Prices from market clearing. Aggregate demand in cell `i` is
/// `(B + Z S) / (K T p_i) - Z`; setting it to `G_i` gives
/// `K T (G_i + Z) p_i - Z sum_j p_j = B`.
pub fn reference_prices(s: &Scenario) -> Vec<Vec<f64>> {
    let (kk, tt) = (s.companies.len(), s.periods);
    let m = kk * tt;
    let z: f64 = s.consumers.iter().map(|c| c.zeta).sum();
    let b: f64 = s.consumers.iter().map(|c| c.budget).sum();
    let g: Vec<f64> = s.companies.iter().flat_map(|c| c.capacity.iter().copied()).collect();
    let a = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { m as f64 * (g[i] + z) - z } else { -z })
                .collect()
        })
        .collect();
    let p = gauss_solve(a, vec![b; m]);
    p.chunks(tt).map(|r| r.to_vec()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Maximizes `gamma sum ln(zeta + d)` subject to `sum p d = B`, `d >= 0`
/// by bisection on the water level `mu`, where `d = max(0, mu / p - zeta)`
/// (equivalently `p d = max(0, mu - zeta p)`).
pub fn water_filling(c: &Consumer, prices: &[f64]) -> Vec<f64> {
    let spend = |mu: f64| -> f64 { prices.iter().map(|&p| (mu - c.zeta * p).max(0.0)).sum() };
    let mut lo = 0.0;
    let mut hi = c.budget + c.zeta * prices.iter().cloned().fold(0.0, f64::max) + 1.0;
    while spend(hi) < c.budget {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) < c.budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    prices.iter().map(|&p| (mu / p - c.zeta).max(0.0)).collect()
}

pub fn log_utility(c: &Consumer, demands: &[f64]) -> f64 {
    c.gamma * demands.iter().map(|&d| (c.zeta + d).ln()).sum::<f64>()
}

/// Company revenue for an allocation with `zeta = gamma = 1`:
/// `B sum_t G/(G+N) / (K T - sum_{j,s} N/(G+N))`.
pub fn reference_revenue(k: usize, alloc: &[Vec<f64>], n: f64, b: f64) -> f64 {
    let cells: usize = alloc.iter().map(|r| r.len()).sum();
    let denom = cells as f64 - alloc.iter().flatten().map(|&g| n / (g + n)).sum::<f64>();
    alloc[k].iter().map(|&g| b * g / ((g + n) * denom)).sum()
}

pub fn flat(p: &PriceSchedule) -> Vec<f64> {
    p.rows().iter().flatten().copied().collect()
}
