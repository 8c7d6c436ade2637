//! Newsvendor that is robust over a Kolmogorov-Smirnov ball around the
//! empirical CDF.
//!
//! For decision `x` the expected cost is
//! `int_{lo}^{x} F dt + kappa int_{x}^{hi} (1 - F) dt` with
//! `kappa = s / (1 - s)`. Any CDF in the ball with `F(x-) = c` is dominated by
//! `min(U, c)` below `x` and `max(L, c)` from `x` on, where `U` and `L` are the
//! band edges, so the worst case is a concave one-dimensional problem in `c`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::newsvendor_cost;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KsConfig {
    pub rho_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for KsConfig {
    fn default() -> Self {
        Self { rho_grid: (0..=20).map(|j| j as f64 * 0.05).collect(), folds: 5, seed: 0 }
    }
}

impl KsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.rho_grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidGrid("KS radii must lie in [0, 1]".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig("KS cross-validation needs at least 2 folds".into()));
        }
        Ok(())
    }
}

/// A maximal interval on which the empirical CDF is constant.
#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    f: f64,
}

fn segments(sorted: &[f64], lo: f64, hi: f64) -> Vec<Segment> {
    let n = sorted.len() as f64;
    let mut out = Vec::with_capacity(sorted.len() + 1);
    let mut left = lo;
    let mut f = 0.0;
    let mut j = 0;
    while j < sorted.len() {
        let y = sorted[j];
        while j < sorted.len() && sorted[j] == y {
            j += 1;
        }
        if y > left {
            out.push(Segment { a: left, b: y, f });
        }
        left = y;
        f = j as f64 / n;
    }
    if hi > left {
        out.push(Segment { a: left, b: hi, f });
    }
    out
}

fn check_inputs(sorted: &[f64], rho: f64, s: f64, bounds: (f64, f64)) -> Result<()> {
    let (lo, hi) = bounds;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidBounds { lo, hi });
    }
    if sorted.is_empty() {
        return Err(Error::ZeroData);
    }
    if sorted[0] < lo || sorted[sorted.len() - 1] > hi {
        return Err(Error::InvalidBounds { lo, hi });
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("KS radius {rho} outside [0, 1]")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidCost(format!("critical fractile {s} outside (0, 1)")));
    }
    Ok(())
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Worst-case expected newsvendor cost of `x` over the KS ball of radius `rho`
/// among distributions supported on `bounds`.
pub fn ks_worst_case(samples: &[f64], rho: f64, x: f64, s: f64, bounds: (f64, f64)) -> Result<f64> {
    let sorted = sorted_copy(samples);
    check_inputs(&sorted, rho, s, bounds)?;
    if rho == 0.0 {
        // The ball is the empirical distribution itself; sum in input order.
        return Ok(empirical_cost(samples, x, s));
    }
    Ok(worst_case_sorted(&sorted, rho, x, s, bounds))
}

fn empirical_cost(samples: &[f64], x: f64, s: f64) -> f64 {
    samples.iter().map(|&y| newsvendor_cost(s, x, y)).sum::<f64>() / samples.len() as f64
}

fn worst_case_sorted(sorted: &[f64], rho: f64, x: f64, s: f64, (lo, hi): (f64, f64)) -> f64 {
    if rho == 0.0 {
        return empirical_cost(sorted, x, s);
    }
    let kappa = s / (1.0 - s);
    // Outside the bounds the cost is the boundary cost plus a constant.
    if x < lo {
        return kappa * (lo - x) + worst_case_sorted(sorted, rho, lo, s, (lo, hi));
    }
    if x > hi {
        return (x - hi) + worst_case_sorted(sorted, rho, hi, s, (lo, hi));
    }
    let upper = |f: f64| (f + rho).min(1.0);
    let lower = |f: f64| (f - rho).max(0.0);
    // Pieces below and above x as (length, band edge).
    let mut below: Vec<(f64, f64)> = Vec::new();
    let mut above: Vec<(f64, f64)> = Vec::new();
    let mut l_left = 0.0;
    let mut u_at = 1.0;
    for seg in segments(sorted, lo, hi) {
        if seg.b <= x {
            below.push((seg.b - seg.a, upper(seg.f)));
            l_left = lower(seg.f);
        } else if seg.a >= x {
            above.push((seg.b - seg.a, lower(seg.f)));
        } else {
            below.push((x - seg.a, upper(seg.f)));
            above.push((seg.b - x, lower(seg.f)));
            l_left = lower(seg.f);
        }
        if seg.a <= x && x < seg.b {
            u_at = upper(seg.f);
        }
    }
    if x == hi {
        u_at = 1.0;
    }
    let j = |c: f64| {
        let under: f64 = below.iter().map(|&(len, u)| len * u.min(c)).sum();
        let over: f64 = above.iter().map(|&(len, l)| len * (1.0 - l.max(c))).sum();
        under + kappa * over
    };
    let (c_lo, c_hi) = (l_left, u_at);
    let mut best = j(c_lo).max(j(c_hi));
    for &c in below.iter().map(|(_, u)| u).chain(above.iter().map(|(_, l)| l)) {
        if c > c_lo && c < c_hi {
            best = best.max(j(c));
        }
    }
    best
}

/// Smallest minimizer of the worst-case cost over the KS ball.
pub fn ks_solve(samples: &[f64], rho: f64, s: f64, bounds: (f64, f64)) -> Result<f64> {
    let sorted = sorted_copy(samples);
    check_inputs(&sorted, rho, s, bounds)?;
    Ok(solve_sorted(&sorted, rho, s, bounds))
}

/// The worst-case objective is convex in `x` with slope `(c*(x) - s)/(1 - s)`
/// where `c*` is the worst-case `F(x-)`; this finds the first `x` where the
/// right derivative is nonnegative.
fn solve_sorted(sorted: &[f64], rho: f64, s: f64, (lo, hi): (f64, f64)) -> f64 {
    let kappa = s / (1.0 - s);
    let segs = segments(sorted, lo, hi);
    let upper: Vec<f64> = segs.iter().map(|g| (g.f + rho).min(1.0)).collect();
    let lower: Vec<f64> = segs.iter().map(|g| (g.f - rho).max(0.0)).collect();
    // Measure of {t >= seg.a : L(t) < s}, accumulated from the right.
    let mut above_low = vec![0.0; segs.len() + 1];
    for j in (0..segs.len()).rev() {
        above_low[j] = above_low[j + 1] + if lower[j] < s { segs[j].b - segs[j].a } else { 0.0 };
    }
    let mut below_high = 0.0;
    for (j, g) in segs.iter().enumerate() {
        if lower[j] >= s {
            return g.a;
        }
        if upper[j] >= s {
            let phi = below_high - kappa * above_low[j];
            if phi >= 0.0 {
                return g.a;
            }
            let slope = 1.0 + kappa;
            let x = g.a - phi / slope;
            if x < g.b {
                return x;
            }
            below_high += g.b - g.a;
        }
    }
    hi
}

/// Radius from `rho_grid` minimizing the seeded k-fold held-out newsvendor
/// cost. `stream` separates the shuffles of different subproblems.
pub fn ks_select_rho(samples: &[f64], s: f64, bounds: (f64, f64), config: &KsConfig, stream: u64) -> Result<f64> {
    config.validate()?;
    let smallest = config.rho_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if samples.len() < config.folds {
        return Ok(smallest);
    }
    check_inputs(&sorted_copy(samples), 0.0, s, bounds)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng::stream(config.seed, &[stream], "ks-folds"));
    let n = samples.len();
    let folds: Vec<(Vec<f64>, Vec<f64>)> = (0..config.folds)
        .map(|f| {
            let (a, b) = (f * n / config.folds, (f + 1) * n / config.folds);
            let held: Vec<f64> = order[a..b].iter().map(|&i| samples[i]).collect();
            let mut train: Vec<f64> = order[..a].iter().chain(&order[b..]).map(|&i| samples[i]).collect();
            train.sort_by(f64::total_cmp);
            (train, held)
        })
        .collect();
    let mut best = (f64::INFINITY, smallest);
    let mut grid = config.rho_grid.clone();
    grid.sort_by(f64::total_cmp);
    for rho in grid {
        let mut total = 0.0;
        for (train, held) in &folds {
            let x = solve_sorted(train, rho, s, bounds);
            total += held.iter().map(|&y| newsvendor_cost(s, x, y)).sum::<f64>();
        }
        let value = total / n as f64;
        if value < best.0 {
            best = (value, rho);
        }
    }
    Ok(best.1)
}
