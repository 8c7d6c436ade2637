use crate::error::{Error, Result};
use crate::measure::{check_alpha, shrink_into, Distribution};
use crate::problem::{CostModel, Decision, SubproblemInstance};

/// Two objective values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Minimizes `q^T c(x)` over the feasible set of `instance`.
///
/// Newsvendor returns the smallest support point whose cumulative mass
/// reaches `s`; tables break ties toward the lowest feasible index.
pub fn solve_plugin(instance: &SubproblemInstance, measure: &Distribution) -> Result<Decision> {
    if measure.dim() != instance.dim() {
        return Err(Error::DimensionMismatch { expected: instance.dim(), got: measure.dim() });
    }
    Ok(solve_probs(instance, measure.probs()))
}

/// Plug-in decision for raw probabilities `q` (no validation).
pub fn solve_plugin_probs(instance: &SubproblemInstance, q: &[f64]) -> Decision {
    solve_probs(instance, q)
}

pub(crate) fn solve_probs(instance: &SubproblemInstance, q: &[f64]) -> Decision {
    let support = instance.support();
    match instance.cost_model() {
        CostModel::Newsvendor { s } => {
            let mut cum = 0.0;
            for (i, &p) in q.iter().enumerate() {
                cum += p;
                if cum >= s - TIE_TOL {
                    return Decision::Level(support[i]);
                }
            }
            Decision::Level(support[support.len() - 1])
        }
        CostModel::Mse => Decision::Level(q.iter().zip(support).map(|(p, a)| p * a).sum()),
        CostModel::Table { costs, .. } => {
            let values: Vec<f64> = costs.iter().map(|row| dot(row, q)).collect();
            Decision::Index(lowest_argmin(&values))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn lowest_argmin(values: &[f64]) -> usize {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= min + TIE_TOL).unwrap_or(0)
}

/// Plug-in solution against the shrunken measure. Subproblems without data
/// get the fully-shrunken solution for every `alpha`.
pub fn solve_shrunken(instance: &SubproblemInstance, anchor: &Distribution, alpha: f64) -> Result<Decision> {
    check_alpha(alpha)?;
    if anchor.dim() != instance.dim() {
        return Err(Error::DimensionMismatch { expected: instance.dim(), got: anchor.dim() });
    }
    let mut ws = Workspace::new(instance.dim());
    Ok(ws.solve(instance, anchor.probs(), alpha, None))
}

/// Solution under the true distribution.
pub fn full_information_decision(instance: &SubproblemInstance) -> Result<Decision> {
    let truth = instance.truth().ok_or(Error::MissingTruth(0))?;
    Ok(solve_probs(instance, truth.probs()))
}

/// Scratch space for solving many shrunken problems without allocating.
#[derive(Debug, Clone)]
pub struct Workspace {
    buf: Vec<f64>,
    counts: Vec<u32>,
}

impl Workspace {
    pub fn new(d: usize) -> Self {
        Self { buf: vec![0.0; d], counts: vec![0; d] }
    }

    /// `x_k(alpha, anchor, m_k - e_leave)`; `leave = None` uses the full counts.
    /// The caller guarantees `m_k[leave] > 0`.
    pub fn solve(
        &mut self,
        instance: &SubproblemInstance,
        anchor: &[f64],
        alpha: f64,
        leave: Option<usize>,
    ) -> Decision {
        let d = instance.dim();
        self.buf.resize(d, 0.0);
        let m = instance.counts().as_slice();
        let mut total = instance.n_obs();
        let counts: &[u32] = match leave {
            None => m,
            Some(i) => {
                debug_assert!(m[i] > 0);
                self.counts.clear();
                self.counts.extend_from_slice(m);
                self.counts[i] -= 1;
                total -= 1;
                &self.counts
            }
        };
        shrink_into(counts, total, anchor, alpha, &mut self.buf);
        solve_probs(instance, &self.buf)
    }

    /// Solves against arbitrary training counts in place of the instance's own.
    pub fn solve_counts(
        &mut self,
        instance: &SubproblemInstance,
        counts: &[u32],
        anchor: &[f64],
        alpha: f64,
    ) -> Decision {
        self.buf.resize(instance.dim(), 0.0);
        let total = counts.iter().map(|&c| c as u64).sum();
        shrink_into(counts, total, anchor, alpha, &mut self.buf);
        solve_probs(instance, &self.buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Counts;
    use crate::problem::newsvendor_cost;

    fn newsvendor(s: f64, support: Vec<f64>, m: Vec<u32>) -> SubproblemInstance {
        SubproblemInstance::new(support, CostModel::Newsvendor { s }, Counts::new(m)).unwrap()
    }

    #[test]
    fn plugin_examples() {
        let p = newsvendor(0.5, vec![0.0, 1.0], vec![0, 0]);
        let q = Distribution::new(vec![0.4, 0.6]).unwrap();
        assert_eq!(solve_plugin(&p, &q).unwrap(), Decision::Level(1.0));

        let p = SubproblemInstance::new(vec![0.0, 2.0, 4.0], CostModel::Mse, Counts::zeros(3)).unwrap();
        let q = Distribution::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(solve_plugin(&p, &q).unwrap(), Decision::Level(2.0));

        let p = SubproblemInstance::new(
            vec![0.0, 1.0],
            CostModel::table(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            Counts::zeros(2),
        )
        .unwrap();
        assert_eq!(solve_plugin(&p, &Distribution::uniform(2)).unwrap(), Decision::Index(0));
    }

    // Bernoulli newsvendor with support (0, 1): order one unit iff the
    // shrunken mass at 1 strictly exceeds 1/2 + (alpha/N)(1/2 - p01).
    fn indicator_oracle(p_hat1: f64, n: f64, p01: f64, alpha: f64) -> f64 {
        if p_hat1 > 0.5 + alpha / n * (0.5 - p01) {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn bernoulli_newsvendor_matches_indicator_form() {
        let p = newsvendor(0.5, vec![0.0, 1.0], vec![4, 6]);
        let anchor = Distribution::new(vec![0.7, 0.3]).unwrap();
        for &alpha in &[0.0, 1.0, 2.5, 4.9, 5.1, 8.0, 100.0] {
            let x = solve_shrunken(&p, &anchor, alpha).unwrap();
            assert_eq!(x, Decision::Level(indicator_oracle(0.6, 10.0, 0.3, alpha)), "alpha={alpha}");
        }
        // At alpha = 5 the shrunken mass is exactly 1/2 and the lower quantile is kept.
        assert_eq!(solve_shrunken(&p, &anchor, 5.0).unwrap(), Decision::Level(0.0));
    }

    #[test]
    fn alpha_zero_is_saa_and_no_data_is_anchor_solution() {
        let p = newsvendor(0.9, vec![1.0, 2.0, 3.0, 4.0], vec![3, 3, 3, 1]);
        let anchor = Distribution::point_mass(4, 0);
        let saa = solve_plugin(&p, &crate::measure::empirical_distribution(p.counts()).unwrap()).unwrap();
        assert_eq!(solve_shrunken(&p, &anchor, 0.0).unwrap(), saa);
        assert_eq!(saa, Decision::Level(3.0));

        let empty = newsvendor(0.9, vec![1.0, 2.0, 3.0, 4.0], vec![0, 0, 0, 0]);
        for &alpha in &[0.0, 1.0, f64::INFINITY] {
            assert_eq!(solve_shrunken(&empty, &anchor, alpha).unwrap(), Decision::Level(1.0));
        }
    }

    #[test]
    fn newsvendor_plugin_minimizes_expected_cost() {
        let support = vec![0.0, 1.5, 2.0, 3.5, 7.0];
        let q = [0.1, 0.3, 0.05, 0.35, 0.2];
        for &s in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let p = newsvendor(s, support.clone(), vec![0; 5]);
            let x = solve_probs(&p, &q).level().unwrap();
            let value = |x: f64| q.iter().zip(&support).map(|(w, a)| w * newsvendor_cost(s, x, *a)).sum::<f64>();
            let best = (0..=7000).map(|i| value(i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
            assert!(value(x) <= best + 1e-12, "s={s}");
        }
    }

    #[test]
    fn workspace_leave_one_out_matches_explicit_counts() {
        let p = newsvendor(0.7, vec![1.0, 2.0, 3.0], vec![2, 0, 3]);
        let anchor = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let mut ws = Workspace::new(3);
        for &alpha in &[0.0, 0.5, 3.0, f64::INFINITY] {
            for i in [0, 2] {
                let reduced = p.with_counts(p.counts().without(i).unwrap()).unwrap();
                assert_eq!(
                    ws.solve(&p, anchor.probs(), alpha, Some(i)),
                    solve_shrunken(&reduced, &anchor, alpha).unwrap()
                );
            }
        }
    }
}
