use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::problem::Dataset;

/// Smallest Beta shape used in place of a zero shape parameter.
pub const MIN_BETA_SHAPE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnchorSpec {
    Fixed {
        dist: Distribution,
    },
    GrandMean,
    /// Scaled `Beta(mu * theta / (1 - mu), theta)` anchors, one candidate per
    /// `(mean, shape)` pair, discretized onto each problem's support bins.
    BetaFamily {
        means: Vec<f64>,
        shapes: Vec<f64>,
    },
    LooOptimized {
        candidates: Vec<Distribution>,
    },
}

impl AnchorSpec {
    /// The Beta grid `{1e-6, 0.05, ..., 1} x {1e-6, 0.05, ..., 3}`.
    pub fn default_beta_family() -> Self {
        let means = (0..=20).map(|j| if j == 0 { MIN_BETA_SHAPE } else { j as f64 * 0.05 }).collect();
        let shapes = (0..=60).map(|j| if j == 0 { MIN_BETA_SHAPE } else { j as f64 * 0.05 }).collect();
        AnchorSpec::BetaFamily { means, shapes }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnchorSpec::BetaFamily { means, shapes } => {
                if means.is_empty() || shapes.is_empty() {
                    return Err(Error::EmptyCandidates);
                }
                if means.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
                    return Err(Error::InvalidConfig("Beta means must lie in (0, 1]".into()));
                }
                if shapes.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
                    return Err(Error::InvalidConfig("Beta shapes must be finite and nonnegative".into()));
                }
                Ok(())
            }
            AnchorSpec::LooOptimized { candidates } if candidates.is_empty() => Err(Error::EmptyCandidates),
            _ => Ok(()),
        }
    }
}

/// One anchor per subproblem. Identical anchors share storage.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    per_problem: Vec<Arc<Distribution>>,
}

impl AnchorSet {
    pub fn shared(anchor: Distribution, k: usize) -> Self {
        let a = Arc::new(anchor);
        Self { per_problem: vec![a; k] }
    }

    pub fn per_problem(anchors: Vec<Distribution>) -> Self {
        Self { per_problem: anchors.into_iter().map(Arc::new).collect() }
    }

    pub fn get(&self, k: usize) -> &Distribution {
        &self.per_problem[k]
    }

    pub fn len(&self) -> usize {
        self.per_problem.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_problem.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Distribution> {
        self.per_problem.iter().map(|a| a.as_ref())
    }

    pub(crate) fn check(&self, dataset: &Dataset) -> Result<()> {
        if self.len() != dataset.len() {
            return Err(Error::DimensionMismatch { expected: dataset.len(), got: self.len() });
        }
        for (p, a) in dataset.problems().iter().zip(self.iter()) {
            if p.dim() != a.dim() {
                return Err(Error::DimensionMismatch { expected: p.dim(), got: a.dim() });
            }
        }
        Ok(())
    }
}

/// Average of the empirical distributions of problems with data; uniform if
/// no problem has any.
pub fn grand_mean(dataset: &Dataset) -> Result<Distribution> {
    let d = dataset.common_dim().ok_or_else(|| Error::DimensionMismatch {
        expected: dataset.problems()[0].dim(),
        got: dataset.problems().iter().map(|p| p.dim()).find(|&x| x != dataset.problems()[0].dim()).unwrap_or(0),
    })?;
    let mut sum = vec![0.0; d];
    let mut with_data = 0usize;
    for p in dataset.problems() {
        let n = p.n_obs();
        if n == 0 {
            continue;
        }
        with_data += 1;
        for (s, &c) in sum.iter_mut().zip(p.counts().as_slice()) {
            *s += c as f64 / n as f64;
        }
    }
    if with_data == 0 {
        return Ok(Distribution::uniform(d));
    }
    sum.iter_mut().for_each(|s| *s /= with_data as f64);
    Distribution::new(sum)
}

/// Mass of `Beta(mean * shape / (1 - mean), shape)` on the `d` equal-width
/// bins of `[0, 1]`.
pub fn beta_anchor(mean: f64, shape: f64, d: usize) -> Result<Distribution> {
    if !(mean > 0.0 && mean <= 1.0) {
        return Err(Error::InvalidConfig(format!("Beta mean {mean} outside (0, 1]")));
    }
    if mean == 1.0 {
        return Ok(Distribution::point_mass(d, d - 1));
    }
    let b = shape.max(MIN_BETA_SHAPE);
    let a = mean * b / (1.0 - mean);
    let mut prev = 0.0;
    let mut probs = Vec::with_capacity(d);
    for j in 1..=d {
        let next = if j == d { 1.0 } else { beta_reg(a, b, j as f64 / d as f64) };
        let next = if next.is_finite() { next.clamp(prev, 1.0) } else { prev };
        probs.push(next - prev);
        prev = next;
    }
    Distribution::new(probs)
}

/// Resolves a single-candidate anchor spec to one anchor per problem.
pub fn resolve_anchor(spec: &AnchorSpec, dataset: &Dataset) -> Result<AnchorSet> {
    let mut all = anchor_candidates(spec, dataset)?;
    if all.len() != 1 {
        return Err(Error::InvalidConfig(format!("anchor spec has {} candidates; use a joint selector", all.len())));
    }
    Ok(all.pop().unwrap())
}

/// Every candidate anchor described by `spec`, each resolved per problem.
pub fn anchor_candidates(spec: &AnchorSpec, dataset: &Dataset) -> Result<Vec<AnchorSet>> {
    spec.validate()?;
    let k = dataset.len();
    match spec {
        AnchorSpec::Fixed { dist } => {
            let set = AnchorSet::shared(dist.clone(), k);
            set.check(dataset)?;
            Ok(vec![set])
        }
        AnchorSpec::GrandMean => Ok(vec![AnchorSet::shared(grand_mean(dataset)?, k)]),
        AnchorSpec::LooOptimized { candidates } => candidates
            .iter()
            .map(|c| {
                let set = AnchorSet::shared(c.clone(), k);
                set.check(dataset).map(|_| set)
            })
            .collect(),
        AnchorSpec::BetaFamily { means, shapes } => {
            let mut dims: Vec<usize> = dataset.problems().iter().map(|p| p.dim()).collect();
            dims.sort_unstable();
            dims.dedup();
            let mut out = Vec::with_capacity(means.len() * shapes.len());
            for &mu in means {
                for &theta in shapes {
                    let by_dim: Vec<(usize, Arc<Distribution>)> = dims
                        .iter()
                        .map(|&d| beta_anchor(mu, theta, d).map(|a| (d, Arc::new(a))))
                        .collect::<Result<_>>()?;
                    let per_problem = dataset
                        .problems()
                        .iter()
                        .map(|p| by_dim.iter().find(|(d, _)| *d == p.dim()).unwrap().1.clone())
                        .collect();
                    out.push(AnchorSet { per_problem });
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Counts;
    use crate::problem::{CostModel, SubproblemInstance};

    fn dataset(counts: Vec<Vec<u32>>) -> Dataset {
        Dataset::new(
            counts
                .into_iter()
                .map(|m| {
                    let d = m.len();
                    let support = (0..d).map(|i| i as f64).collect();
                    SubproblemInstance::new(support, CostModel::Newsvendor { s: 0.5 }, Counts::new(m)).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn grand_mean_examples() {
        let gm = grand_mean(&dataset(vec![vec![3, 0], vec![0, 1], vec![0, 0]])).unwrap();
        assert_eq!(gm.probs(), &[0.5, 0.5]);
        let gm = grand_mean(&dataset(vec![vec![0, 0, 0], vec![0, 0, 0]])).unwrap();
        assert_eq!(gm, Distribution::uniform(3));
        assert!(matches!(grand_mean(&dataset(vec![vec![1, 0], vec![1, 0, 0]])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn uniform_beta_has_equal_bins() {
        let a = beta_anchor(0.5, 1.0, 4).unwrap();
        for &p in a.probs() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert_eq!(beta_anchor(1.0, 2.0, 3).unwrap(), Distribution::point_mass(3, 2));
    }

    #[test]
    fn beta_grid_extremes_are_valid_distributions() {
        if let AnchorSpec::BetaFamily { means, shapes } = AnchorSpec::default_beta_family() {
            assert_eq!(means.len(), 21);
            assert_eq!(shapes.len(), 61);
            for &m in &means {
                for &t in &shapes {
                    let a = beta_anchor(m, t, 20).unwrap();
                    assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn beta_mean_matches_requested_mean() {
        // Bin-midpoint mean of a fine discretization approaches mu.
        let a = beta_anchor(0.3, 2.0, 2000).unwrap();
        let mean: f64 = a.probs().iter().enumerate().map(|(j, p)| p * (j as f64 + 0.5) / 2000.0).sum();
        assert!((mean - 0.3).abs() < 1e-3);
    }

    #[test]
    fn candidates_resolve_per_problem_dimension() {
        let data = dataset(vec![vec![1, 1], vec![1, 0, 0]]);
        let spec = AnchorSpec::BetaFamily { means: vec![0.5], shapes: vec![1.0, 2.0] };
        let c = anchor_candidates(&spec, &data).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].get(0).dim(), 2);
        assert_eq!(c[0].get(1).dim(), 3);
        assert!(resolve_anchor(&spec, &data).is_err());
    }
}
