//! Distributions on a finite support, observation counts, and the shrunken
//! measure that interpolates between an empirical distribution and an anchor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction tolerance on the simplex constraint.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Inputs off the simplex by at most this much are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// A probability vector over `d >= 1` support indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if *p < 0.0 {
                if *p < -SIMPLEX_TOL {
                    return Err(Error::InvalidDistribution(format!("negative entry {p}")));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        let gap = (total - 1.0).abs();
        if gap > RENORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        if gap > SIMPLEX_TOL {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Self { probs })
    }

    /// The uniform distribution `e / d`.
    pub fn uniform(d: usize) -> Self {
        assert!(d >= 1, "uniform distribution needs d >= 1");
        Self { probs: vec![1.0 / d as f64; d] }
    }

    /// A point mass on support index `i`.
    pub fn point_mass(d: usize, i: usize) -> Self {
        assert!(i < d);
        let mut probs = vec![0.0; d];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expectation of `values` (one per support index).
    pub fn dot(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.probs.len());
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub(crate) fn from_raw_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// Occurrence counts per support index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct Counts {
    m: Vec<u32>,
    total: u64,
}

impl Counts {
    pub fn new(m: Vec<u32>) -> Self {
        let total = m.iter().map(|&c| c as u64).sum();
        Self { m, total }
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.m
    }

    /// Total number of observations.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Counts with one observation at index `i` removed.
    pub fn without(&self, i: usize) -> Option<Self> {
        if self.m[i] == 0 {
            return None;
        }
        let mut m = self.m.clone();
        m[i] -= 1;
        Some(Self { m, total: self.total - 1 })
    }

    /// Expands the counts into one support index per observation, index-major.
    pub fn expand(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total as usize);
        for (i, &c) in self.m.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, c as usize));
        }
        out
    }
}

impl From<Vec<u32>> for Counts {
    fn from(m: Vec<u32>) -> Self {
        Counts::new(m)
    }
}

impl From<Counts> for Vec<u32> {
    fn from(c: Counts) -> Self {
        c.m
    }
}

/// Validates a pooling amount: nonnegative, possibly `+inf`.
pub fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(alpha)
}

/// `m / N`.
pub fn empirical_distribution(counts: &Counts) -> Result<Distribution> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::ZeroData);
    }
    let n = n as f64;
    Ok(Distribution::from_raw_unchecked(counts.as_slice().iter().map(|&c| c as f64 / n).collect()))
}

/// `(alpha * anchor + m) / (N + alpha)`, equal to the anchor when there is no
/// data or `alpha` is infinite.
pub fn shrunken_measure(counts: &Counts, anchor: &Distribution, alpha: f64) -> Result<Distribution> {
    check_alpha(alpha)?;
    if counts.dim() != anchor.dim() {
        return Err(Error::DimensionMismatch { expected: anchor.dim(), got: counts.dim() });
    }
    let mut out = vec![0.0; anchor.dim()];
    shrink_into(counts.as_slice(), counts.total(), anchor.probs(), alpha, &mut out);
    Ok(Distribution::from_raw_unchecked(out))
}

/// Allocation-free core of [`shrunken_measure`]. `total` must equal `sum(m)`.
pub(crate) fn shrink_into(m: &[u32], total: u64, anchor: &[f64], alpha: f64, out: &mut [f64]) {
    if total == 0 || alpha == f64::INFINITY {
        out.copy_from_slice(anchor);
        return;
    }
    let denom = total as f64 + alpha;
    for ((o, &c), &a) in out.iter_mut().zip(m).zip(anchor) {
        *o = (alpha * a + c as f64) / denom;
    }
}
