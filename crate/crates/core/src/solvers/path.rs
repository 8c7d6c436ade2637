//! Exact solution path `alpha -> x_k(alpha, anchor, m_k)` for finite feasible sets.
//!
//! With `theta = alpha / (alpha + N)` every feasible point `x` contributes the
//! line `g_x(theta) = (1 - theta) p_hat^T c(x) + theta anchor^T c(x)`. The
//! decision is the lowest-index line on the lower envelope, so the path is
//! piecewise constant with at most `|X| - 1` breakpoints.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::measure::{empirical_distribution, Distribution};
use crate::problem::{newsvendor_cost, CostModel, Decision, SubproblemInstance};

use super::plugin::{lowest_argmin, TIE_TOL};

const THETA_TOL: f64 = 1e-12;
const BREAKPOINT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPath {
    breakpoints: Vec<f64>,
    decisions: Vec<Decision>,
    at_breakpoints: Vec<Decision>,
    at_infinity: Decision,
    n_obs: u64,
}

impl AlphaPath {
    /// Strictly increasing pooling amounts where the decision changes.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Decision on each open interval between breakpoints; the last entry
    /// covers `(last breakpoint, inf)`.
    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// The fully-shrunken decision `x_k(inf, anchor)`.
    pub fn at_infinity(&self) -> Decision {
        self.at_infinity
    }

    pub fn n_obs(&self) -> u64 {
        self.n_obs
    }

    pub fn decision_at(&self, alpha: f64) -> Decision {
        if alpha == f64::INFINITY {
            return self.at_infinity;
        }
        // Breakpoints carry rounding error, so alpha values within a relative
        // 1e-9 of one are treated as sitting on it.
        let near = |b: f64| (b - alpha).abs() <= BREAKPOINT_RTOL * b.abs().max(1.0);
        let pos = self.breakpoints.partition_point(|&b| b < alpha);
        if pos < self.breakpoints.len() && near(self.breakpoints[pos]) {
            self.at_breakpoints[pos]
        } else if pos > 0 && near(self.breakpoints[pos - 1]) {
            self.at_breakpoints[pos - 1]
        } else {
            self.decisions[pos]
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
    index: usize,
}

impl Line {
    fn at(&self, theta: f64) -> f64 {
        self.intercept + self.slope * theta
    }
}

/// Cost rows plus, for newsvendor problems, the order level of each row.
type Lowered<'a> = (Vec<Vec<f64>>, Option<&'a [f64]>);

fn lowered_table(instance: &SubproblemInstance) -> Result<Lowered<'_>> {
    match instance.cost_model() {
        CostModel::Table { costs, .. } => Ok((costs.as_ref().clone(), None)),
        CostModel::Newsvendor { s } => {
            let a = instance.support();
            let rows = a.iter().map(|&x| a.iter().map(|&xi| newsvendor_cost(*s, x, xi)).collect()).collect();
            Ok((rows, Some(a)))
        }
        CostModel::Mse => Err(Error::InvalidCost("the pooling path needs a finite feasible set".into())),
    }
}

/// Computes the exact pooling path. Newsvendor problems are lowered to a table
/// over their support levels.
pub fn alpha_path(instance: &SubproblemInstance, anchor: &Distribution) -> Result<AlphaPath> {
    if anchor.dim() != instance.dim() {
        return Err(Error::DimensionMismatch { expected: instance.dim(), got: anchor.dim() });
    }
    let (costs, levels) = lowered_table(instance)?;
    if costs.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let n = instance.n_obs();
    let to_decision = |j: usize| match levels {
        Some(a) => Decision::Level(a[j]),
        None => Decision::Index(j),
    };
    if n == 0 {
        // Without data every alpha gives the anchor solution.
        let values: Vec<f64> = costs.iter().map(|row| anchor.dot(row)).collect();
        let x = to_decision(lowest_argmin(&values));
        return Ok(AlphaPath {
            breakpoints: Vec::new(),
            decisions: vec![x],
            at_breakpoints: Vec::new(),
            at_infinity: x,
            n_obs: 0,
        });
    }
    let p_hat = empirical_distribution(instance.counts())?;
    let lines: Vec<Line> = costs
        .iter()
        .enumerate()
        .map(|(index, row)| {
            let b = p_hat.dot(row);
            let a = anchor.dot(row);
            Line { slope: a - b, intercept: b, index }
        })
        .collect();
    let argmin_at = |theta: f64| {
        let values: Vec<f64> =
            lines.iter().map(|l| if theta == 1.0 { l.intercept + l.slope } else { l.at(theta) }).collect();
        lowest_argmin(&values)
    };

    let hull = lower_envelope(&lines);
    // Crossing points of consecutive hull lines inside (0, 1).
    let mut pieces: Vec<usize> = Vec::new();
    let mut cuts: Vec<f64> = Vec::new();
    let mut start = 0;
    while start + 1 < hull.len() && crossing(&hull[start], &hull[start + 1]) <= THETA_TOL {
        start += 1;
    }
    pieces.push(hull[start].index);
    for w in start..hull.len().saturating_sub(1) {
        let t = crossing(&hull[w], &hull[w + 1]);
        if t >= 1.0 {
            break;
        }
        if cuts.last().is_some_and(|&c| t - c <= THETA_TOL) {
            *pieces.last_mut().unwrap() = hull[w + 1].index;
            continue;
        }
        cuts.push(t);
        pieces.push(hull[w + 1].index);
    }

    let mut thetas = Vec::new();
    let mut decisions = vec![pieces[0]];
    let mut at_points = Vec::new();
    let at_zero = argmin_at(0.0);
    if at_zero != pieces[0] {
        thetas.push(0.0);
        at_points.push(at_zero);
        decisions.push(pieces[0]);
    }
    for (w, &t) in cuts.iter().enumerate() {
        let at = argmin_at(t);
        let (left, right) = (pieces[w], pieces[w + 1]);
        if left == right && at == left {
            continue;
        }
        thetas.push(t);
        at_points.push(at);
        decisions.push(right);
    }

    let nf = n as f64;
    Ok(AlphaPath {
        breakpoints: thetas.iter().map(|&t| t * nf / (1.0 - t)).collect(),
        decisions: decisions.into_iter().map(to_decision).collect(),
        at_breakpoints: at_points.into_iter().map(to_decision).collect(),
        at_infinity: to_decision(argmin_at(1.0)),
        n_obs: n,
    })
}

fn crossing(a: &Line, b: &Line) -> f64 {
    (b.intercept - a.intercept) / (a.slope - b.slope)
}

/// Lower envelope over `theta >= 0` of lines sorted by decreasing slope,
/// keeping the lowest index among coincident lines.
fn lower_envelope(lines: &[Line]) -> Vec<Line> {
    let mut sorted = lines.to_vec();
    sorted.sort_by(|a, b| {
        b.slope
            .partial_cmp(&a.slope)
            .unwrap_or(Ordering::Equal)
            .then(a.intercept.partial_cmp(&b.intercept).unwrap_or(Ordering::Equal))
            .then(a.index.cmp(&b.index))
    });
    let mut unique: Vec<Line> = Vec::with_capacity(sorted.len());
    for l in sorted {
        if let Some(last) = unique.last_mut() {
            if (last.slope - l.slope).abs() <= TIE_TOL {
                if (l.intercept - last.intercept).abs() <= TIE_TOL && l.index < last.index {
                    *last = l;
                }
                continue;
            }
        }
        unique.push(l);
    }
    // On [0, inf) with slopes decreasing, lines enter the envelope in order.
    let mut hull: Vec<Line> = Vec::with_capacity(unique.len());
    for l in unique {
        while let Some(last) = hull.last() {
            // Drop lines that are beaten by `l` already at theta = 0.
            if l.intercept < last.intercept - TIE_TOL
                || ((l.intercept - last.intercept).abs() <= TIE_TOL && l.slope <= last.slope)
            {
                hull.pop();
                continue;
            }
            if hull.len() >= 2 {
                let prev = hull[hull.len() - 2];
                if crossing(&prev, &l) <= crossing(&prev, last) {
                    hull.pop();
                    continue;
                }
            }
            break;
        }
        hull.push(l);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Counts;
    use crate::solvers::solve_shrunken;

    fn table(costs: Vec<Vec<f64>>, m: Vec<u32>) -> SubproblemInstance {
        let d = m.len();
        SubproblemInstance::new((0..d).map(|i| i as f64).collect(), CostModel::table(costs), Counts::new(m)).unwrap()
    }

    #[test]
    fn single_feasible_point_has_no_breakpoints() {
        let p = table(vec![vec![1.0, 2.0, 3.0]], vec![1, 0, 2]);
        let path = alpha_path(&p, &Distribution::uniform(3)).unwrap();
        assert!(path.breakpoints().is_empty());
        assert_eq!(path.decisions(), &[Decision::Index(0)]);
    }

    #[test]
    fn two_lines_cross_once() {
        // p_hat = (1, 0): x0 costs 0, x1 costs 1. Anchor (0, 1): x0 costs 1, x1 costs 0.
        // The lines cross at theta = 1/2, i.e. alpha = N.
        let p = table(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![4, 0]);
        let path = alpha_path(&p, &Distribution::point_mass(2, 1)).unwrap();
        assert_eq!(path.breakpoints().len(), 1);
        assert!((path.breakpoints()[0] - 4.0).abs() < 1e-12);
        assert_eq!(path.decisions(), &[Decision::Index(0), Decision::Index(1)]);
        // Tie at the crossing goes to the lower index.
        assert_eq!(path.decision_at(4.0), Decision::Index(0));
        assert_eq!(path.decision_at(f64::INFINITY), Decision::Index(1));
    }

    #[test]
    fn infinity_is_evaluated_separately() {
        // Under a uniform anchor both rows cost 1/2: x(inf) takes index 0 while
        // every finite alpha prefers the row favoured by the data.
        let p = table(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![3, 0]);
        let path = alpha_path(&p, &Distribution::uniform(2)).unwrap();
        assert!(path.breakpoints().is_empty());
        assert_eq!(path.decision_at(1e9), Decision::Index(1));
        assert_eq!(path.decision_at(f64::INFINITY), Decision::Index(0));
        assert_eq!(solve_shrunken(&p, &Distribution::uniform(2), f64::INFINITY).unwrap(), Decision::Index(0));
    }

    #[test]
    fn newsvendor_path_matches_direct_solves() {
        let p = SubproblemInstance::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            CostModel::Newsvendor { s: 0.8 },
            Counts::new(vec![3, 0, 1, 0, 0]),
        )
        .unwrap();
        let anchor = Distribution::new(vec![0.0, 0.1, 0.1, 0.2, 0.6]).unwrap();
        let path = alpha_path(&p, &anchor).unwrap();
        assert!(path.breakpoints().len() <= 4);
        for i in 0..=4000 {
            let alpha = i as f64 * 0.01;
            assert_eq!(path.decision_at(alpha), solve_shrunken(&p, &anchor, alpha).unwrap(), "alpha={alpha}");
        }
    }

    #[test]
    fn no_data_path_is_constant() {
        let p = table(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 0]);
        let path = alpha_path(&p, &Distribution::new(vec![0.2, 0.8]).unwrap()).unwrap();
        assert!(path.breakpoints().is_empty());
        assert_eq!(path.decision_at(0.0), Decision::Index(1));
        assert_eq!(path.decision_at(f64::INFINITY), Decision::Index(1));
    }

    #[test]
    fn mse_has_no_finite_path() {
        let p = SubproblemInstance::new(vec![0.0, 1.0], CostModel::Mse, Counts::new(vec![1, 1])).unwrap();
        assert!(alpha_path(&p, &Distribution::uniform(2)).is_err());
    }
}
