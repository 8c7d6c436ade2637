//! Closed-form pooling amounts for the squared-error cost.

use crate::error::{Error, Result};
use crate::problem::Dataset;

/// Sample mean and unbiased sample variance of a problem's observations.
fn moments(support: &[f64], counts: &[u32]) -> (f64, f64, u64) {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    let nf = n as f64;
    let mean = support.iter().zip(counts).map(|(a, &c)| a * c as f64).sum::<f64>() / nf;
    let ss = support.iter().zip(counts).map(|(a, &c)| c as f64 * (a - mean) * (a - mean)).sum::<f64>();
    (mean, ss / (nf - 1.0), n)
}

/// James-Stein style pooling amount for anchor means `anchor_means[k]`.
///
/// Problems with fewer than two observations are skipped. With unequal sample
/// sizes each variance uses its own `N_k` and the correction term uses the
/// average `N` over included problems. A nonpositive denominator gives `+inf`.
pub fn alpha_js(dataset: &Dataset, anchor_means: &[f64]) -> Result<f64> {
    if anchor_means.len() != dataset.len() {
        return Err(Error::DimensionMismatch { expected: dataset.len(), got: anchor_means.len() });
    }
    let mut var_sum = 0.0;
    let mut dist_sum = 0.0;
    let mut n_sum = 0.0;
    let mut used = 0usize;
    for (p, &mu0) in dataset.problems().iter().zip(anchor_means) {
        if p.n_obs() < 2 {
            continue;
        }
        let (mean, var, n) = moments(p.support(), p.counts().as_slice());
        var_sum += var;
        dist_sum += (mu0 - mean) * (mu0 - mean);
        n_sum += n as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InsufficientData("no subproblem has two or more observations".into()));
    }
    let kf = used as f64;
    let n_bar = n_sum / kf;
    let numerator = var_sum / kf;
    let denominator = dist_sum / kf - var_sum / (n_bar * kf);
    if denominator <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(numerator / denominator)
}

/// A-priori pooling amount `sum sigma^2 / sum (mu - mu0)^2` from true moments.
pub fn alpha_ap(means: &[f64], variances: &[f64], anchor_means: &[f64]) -> Result<f64> {
    if means.len() != variances.len() || means.len() != anchor_means.len() {
        return Err(Error::DimensionMismatch { expected: means.len(), got: variances.len().min(anchor_means.len()) });
    }
    let num: f64 = variances.iter().sum();
    let den: f64 = means.iter().zip(anchor_means).map(|(m, m0)| (m - m0) * (m - m0)).sum();
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / den)
}
