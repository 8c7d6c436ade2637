//! Subproblem instances: support points, cost model, observed counts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Counts, Distribution};

/// Cost of a decision against each support point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    /// `max(s/(1-s) (xi - x), x - xi)` with critical fractile `s`.
    Newsvendor { s: f64 },
    /// `(x - xi)^2`.
    Mse,
    /// Finite feasible set; row `j` holds the costs of feasible point `j`
    /// against each support index.
    Table {
        costs: Arc<Vec<Vec<f64>>>,
        #[serde(default)]
        labels: Vec<String>,
    },
}

impl CostModel {
    pub fn table(costs: Vec<Vec<f64>>) -> Self {
        CostModel::Table { costs: Arc::new(costs), labels: Vec::new() }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            CostModel::Newsvendor { s } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(Error::InvalidCost(format!("critical fractile {s} outside (0,1)")));
                }
            }
            CostModel::Mse => {}
            CostModel::Table { costs, labels } => {
                if costs.is_empty() {
                    return Err(Error::EmptyFeasibleSet);
                }
                for row in costs.iter() {
                    if row.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: row.len() });
                    }
                    if row.iter().any(|c| !c.is_finite()) {
                        return Err(Error::InvalidCost("non-finite table entry".into()));
                    }
                }
                if !labels.is_empty() && labels.len() != costs.len() {
                    return Err(Error::InvalidCost("label count differs from feasible set size".into()));
                }
            }
        }
        Ok(())
    }
}

/// Newsvendor cost of ordering `x` when demand is `xi`.
#[inline]
pub fn newsvendor_cost(s: f64, x: f64, xi: f64) -> f64 {
    (s / (1.0 - s) * (xi - x)).max(x - xi)
}

/// A decision: a scalar level (newsvendor, MSE) or an index into a table's
/// feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Level(f64),
    Index(usize),
}

impl Decision {
    pub fn level(self) -> Option<f64> {
        match self {
            Decision::Level(x) => Some(x),
            Decision::Index(_) => None,
        }
    }

    /// A real number for reports: the level, or the table index.
    pub fn as_f64(self) -> f64 {
        match self {
            Decision::Level(x) => x,
            Decision::Index(j) => j as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemInstance {
    support: Vec<f64>,
    cost: CostModel,
    counts: Counts,
    weight: f64,
    truth: Option<Distribution>,
}

impl SubproblemInstance {
    pub fn new(support: Vec<f64>, cost: CostModel, counts: Counts) -> Result<Self> {
        let d = support.len();
        if d == 0 {
            return Err(Error::InvalidInstance("empty support".into()));
        }
        if counts.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: counts.dim() });
        }
        if support.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInstance("non-finite support point".into()));
        }
        if !matches!(cost, CostModel::Table { .. }) && support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInstance("support must be strictly increasing".into()));
        }
        cost.validate(d)?;
        Ok(Self { support, cost, counts, weight: 1.0, truth: None })
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInstance(format!("weight {weight} must be positive")));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn with_truth(mut self, truth: Distribution) -> Result<Self> {
        if truth.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: truth.dim() });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn with_counts(&self, counts: Counts) -> Result<Self> {
        if counts.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: counts.dim() });
        }
        let mut out = self.clone();
        out.counts = counts;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    pub fn n_obs(&self) -> u64 {
        self.counts.total()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn truth(&self) -> Option<&Distribution> {
        self.truth.as_ref()
    }

    /// `c_ki(x)`: cost of `decision` against support index `i`.
    #[inline]
    pub fn cost(&self, decision: Decision, i: usize) -> f64 {
        match (&self.cost, decision) {
            (CostModel::Newsvendor { s }, Decision::Level(x)) => newsvendor_cost(*s, x, self.support[i]),
            (CostModel::Mse, Decision::Level(x)) => {
                let e = x - self.support[i];
                e * e
            }
            (CostModel::Table { costs, .. }, Decision::Index(j)) => costs[j][i],
            _ => panic!("decision kind does not match the cost model"),
        }
    }

    /// `c_k(x, xi)` for an arbitrary real outcome (scalar cost models only).
    pub fn cost_at_value(&self, decision: Decision, xi: f64) -> Option<f64> {
        match (&self.cost, decision) {
            (CostModel::Newsvendor { s }, Decision::Level(x)) => Some(newsvendor_cost(*s, x, xi)),
            (CostModel::Mse, Decision::Level(x)) => Some((x - xi) * (x - xi)),
            _ => None,
        }
    }

    /// `q^T c(x)`.
    pub fn expected_cost(&self, decision: Decision, q: &[f64]) -> f64 {
        q.iter().enumerate().map(|(i, &p)| if p == 0.0 { 0.0 } else { p * self.cost(decision, i) }).sum()
    }
}

/// `K` subproblems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    problems: Vec<SubproblemInstance>,
}

impl Dataset {
    pub fn new(problems: Vec<SubproblemInstance>) -> Result<Self> {
        if problems.is_empty() {
            return Err(Error::InvalidInstance("dataset needs at least one subproblem".into()));
        }
        Ok(Self { problems })
    }

    pub fn problems(&self) -> &[SubproblemInstance] {
        &self.problems
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    /// Mean frequency weight.
    pub fn lambda_bar(&self) -> f64 {
        self.problems.iter().map(|p| p.weight).sum::<f64>() / self.len() as f64
    }

    pub fn n_max(&self) -> u64 {
        self.problems.iter().map(|p| p.n_obs()).max().unwrap_or(0)
    }

    pub fn n_avg(&self) -> f64 {
        self.problems.iter().map(|p| p.n_obs() as f64).sum::<f64>() / self.len() as f64
    }

    /// Common support size, if all subproblems share one.
    pub fn common_dim(&self) -> Option<usize> {
        let d = self.problems[0].dim();
        self.problems.iter().all(|p| p.dim() == d).then_some(d)
    }

    pub fn has_truth(&self) -> bool {
        self.problems.iter().all(|p| p.truth.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newsvendor_cost_is_piecewise_linear() {
        assert_eq!(newsvendor_cost(0.5, 1.0, 0.0), 1.0);
        assert_eq!(newsvendor_cost(0.5, 0.0, 1.0), 1.0);
        assert!((newsvendor_cost(0.9, 2.0, 3.0) - 9.0).abs() < 1e-12);
        assert_eq!(newsvendor_cost(0.9, 3.0, 2.0), 1.0);
    }

    #[test]
    fn instance_validation() {
        let c = Counts::new(vec![1, 1]);
        assert!(SubproblemInstance::new(vec![1.0, 0.0], CostModel::Mse, c.clone()).is_err());
        assert!(SubproblemInstance::new(vec![0.0, 1.0], CostModel::Newsvendor { s: 1.0 }, c.clone()).is_err());
        assert!(SubproblemInstance::new(vec![0.0], CostModel::Mse, c.clone()).is_err());
        assert!(SubproblemInstance::new(vec![0.0, 1.0], CostModel::table(vec![]), c.clone()).is_err());
        assert!(SubproblemInstance::new(vec![0.0, 1.0], CostModel::table(vec![vec![1.0]]), c.clone()).is_err());
        let p = SubproblemInstance::new(vec![0.0, 1.0], CostModel::Mse, c).unwrap();
        assert!(p.clone().with_weight(0.0).is_err());
        assert!(p.with_truth(Distribution::uniform(3)).is_err());
    }

    #[test]
    fn dataset_summaries() {
        let mk = |m: Vec<u32>, w: f64| {
            SubproblemInstance::new(vec![0.0, 1.0], CostModel::Mse, Counts::new(m)).unwrap().with_weight(w).unwrap()
        };
        let ds = Dataset::new(vec![mk(vec![1, 2], 1.0), mk(vec![0, 0], 3.0)]).unwrap();
        assert_eq!(ds.lambda_bar(), 2.0);
        assert_eq!(ds.n_max(), 3);
        assert_eq!(ds.n_avg(), 1.5);
        assert!(Dataset::new(vec![]).is_err());
    }
}
