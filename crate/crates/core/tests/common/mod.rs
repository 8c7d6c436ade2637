#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};

pub fn newsvendor(s: f64, x: f64, xi: f64) -> f64 {
    (s / (1.0 - s) * (xi - x)).max(x - xi)
}

/// Worst-case expected newsvendor cost over distributions on a finite atom set
/// in `[lo, hi]` whose CDF stays within `rho` of the empirical CDF, solved as a
/// linear program over the atom masses. The atoms are `lo`, `hi`, `x`, the
/// samples and `extra` evenly spaced points.
pub fn lp_worst_case(samples: &[f64], rho: f64, x: f64, s: f64, lo: f64, hi: f64, extra: usize) -> f64 {
    let mut atoms: Vec<f64> = samples.to_vec();
    atoms.extend([lo, hi, x.clamp(lo, hi)]);
    for j in 0..extra {
        atoms.push(lo + (hi - lo) * (j as f64 + 0.5) / extra as f64);
    }
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let n = samples.len() as f64;
    let emp = |t: f64| samples.iter().filter(|&&y| y <= t).count() as f64 / n;

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = atoms.iter().map(|&z| lp.add_var(newsvendor(s, x, z), (0.0, 1.0))).collect();
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for (m, &z) in atoms.iter().enumerate() {
        let cum: Vec<_> = vars[..=m].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(cum.clone(), ComparisonOp::Le, emp(z) + rho);
        lp.add_constraint(cum, ComparisonOp::Ge, emp(z) - rho);
    }
    lp.solve().expect("feasible: the empirical distribution is in the ball").objective()
}

/// `(alpha * anchor + m) / (N + alpha)`, or the anchor without data.
pub fn shrunk(m: &[u32], anchor: &[f64], alpha: f64) -> Vec<f64> {
    let n: f64 = m.iter().map(|&c| c as f64).sum();
    if n == 0.0 || alpha.is_infinite() {
        return anchor.to_vec();
    }
    m.iter().zip(anchor).map(|(&c, &a)| (alpha * a + c as f64) / (n + alpha)).collect()
}

/// Smallest support point whose cumulative mass reaches `s`.
pub fn quantile(support: &[f64], q: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for (&a, &p) in support.iter().zip(q) {
        acc += p;
        if acc >= s - 1e-12 {
            return a;
        }
    }
    support[support.len() - 1]
}

/// Lowest row index minimizing `q . row`.
pub fn table_argmin(costs: &[Vec<f64>], q: &[f64]) -> usize {
    let vals: Vec<f64> = costs.iter().map(|r| r.iter().zip(q).map(|(c, p)| c * p).sum()).collect();
    let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    vals.iter().position(|&v| v <= best + 1e-12).unwrap()
}

/// `sum_i m_i c(x(alpha, anchor, m - e_i), a_i)` for a newsvendor problem.
pub fn newsvendor_loo(support: &[f64], m: &[u32], anchor: &[f64], alpha: f64, s: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..m.len() {
        if m[i] == 0 {
            continue;
        }
        let mut rest = m.to_vec();
        rest[i] -= 1;
        let x = quantile(support, &shrunk(&rest, anchor, alpha), s);
        total += m[i] as f64 * newsvendor(s, x, support[i]);
    }
    total
}

/// `p . c(x)` for a newsvendor decision.
pub fn newsvendor_expected(support: &[f64], p: &[f64], x: f64, s: f64) -> f64 {
    support.iter().zip(p).map(|(&a, &pi)| pi * newsvendor(s, x, a)).sum()
}
