//! Performance under the true distributions, oracle selections, and the
//! sub-optimality / instability decomposition of the LOO criterion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::check_alpha;
use crate::par;
use crate::pooling::{select_from_curves, sum_curves, AlphaGrid, AnchorSet, Method, PoolingSelection};
use crate::problem::{Dataset, SubproblemInstance};
use crate::solvers::{solve_plugin_probs, Workspace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfSummary {
    pub alpha: f64,
    pub z_perf: f64,
    pub z_full_info: f64,
    /// `(lambda_k / lambda_bar) p_k^T c_k(x_k)` for each subproblem.
    pub per_problem: Vec<f64>,
}

fn require_truth(dataset: &Dataset) -> Result<()> {
    match dataset.problems().iter().position(|p| p.truth().is_none()) {
        Some(k) => Err(Error::MissingTruth(k)),
        None => Ok(()),
    }
}

fn full_info_cost(p: &SubproblemInstance) -> f64 {
    let truth = p.truth().expect("truth checked").probs();
    p.expected_cost(solve_plugin_probs(p, truth), truth)
}

/// Weighted full-information value `(1/K) sum (lambda_k / lambda_bar) min_x p_k^T c_k(x)`.
pub fn z_full_info(dataset: &Dataset) -> Result<f64> {
    require_truth(dataset)?;
    let lb = dataset.lambda_bar();
    let per = par::map_range(dataset.len(), |k| {
        let p = &dataset.problems()[k];
        p.weight() / lb * full_info_cost(p)
    });
    Ok(per.iter().sum::<f64>() / dataset.len() as f64)
}

/// True performance of the pooled decisions at `alpha`.
pub fn z_perf(dataset: &Dataset, anchors: &AnchorSet, alpha: f64) -> Result<PerfSummary> {
    check_alpha(alpha)?;
    require_truth(dataset)?;
    anchors.check(dataset)?;
    let lb = dataset.lambda_bar();
    let problems = dataset.problems();
    let pairs = par::map_range(problems.len(), |k| {
        let p = &problems[k];
        let truth = p.truth().expect("truth checked").probs();
        let x = Workspace::new(p.dim()).solve(p, anchors.get(k).probs(), alpha, None);
        let w = p.weight() / lb;
        (w * p.expected_cost(x, truth), w * full_info_cost(p))
    });
    let kf = problems.len() as f64;
    Ok(PerfSummary {
        alpha,
        z_perf: pairs.iter().map(|t| t.0).sum::<f64>() / kf,
        z_full_info: pairs.iter().map(|t| t.1).sum::<f64>() / kf,
        per_problem: pairs.into_iter().map(|t| t.0).collect(),
    })
}

/// `z_perf` at each alpha.
pub fn z_perf_curve(dataset: &Dataset, anchors: &AnchorSet, alphas: &[f64]) -> Result<Vec<f64>> {
    require_truth(dataset)?;
    anchors.check(dataset)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let lb = dataset.lambda_bar();
    let problems = dataset.problems();
    let curves = par::map_range(problems.len(), |k| {
        let p = &problems[k];
        let truth = p.truth().expect("truth checked").probs();
        let anchor = anchors.get(k).probs();
        let mut ws = Workspace::new(p.dim());
        let w = p.weight() / lb;
        alphas.iter().map(|&a| w * p.expected_cost(ws.solve(p, anchor, a, None), truth)).collect::<Vec<f64>>()
    });
    let kf = problems.len() as f64;
    Ok(sum_curves(&curves, alphas.len()).into_iter().map(|v| v / kf).collect())
}

pub fn select_alpha_oracle(dataset: &Dataset, anchors: AnchorSet, grid: &AlphaGrid) -> Result<PoolingSelection> {
    let curve = z_perf_curve(dataset, &anchors, grid.values())?;
    Ok(select_from_curves(grid.values(), &[curve], vec![anchors], Method::Oracle))
}

pub fn select_joint_oracle(
    dataset: &Dataset,
    candidates: Vec<AnchorSet>,
    grid: &AlphaGrid,
) -> Result<PoolingSelection> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let curves = candidates.iter().map(|c| z_perf_curve(dataset, c, grid.values())).collect::<Result<Vec<_>>>()?;
    Ok(select_from_curves(grid.values(), &curves, candidates, Method::Oracle))
}

/// `z_perf(alpha) - z_perf(reference)`, where `reference` is an oracle
/// selection on the same data and anchors.
pub fn sub_opt(dataset: &Dataset, anchors: &AnchorSet, alpha: f64, reference: &PoolingSelection) -> Result<f64> {
    let at = z_perf(dataset, anchors, alpha)?.z_perf;
    let best = match reference.value() {
        Some(v) => v,
        None => z_perf(dataset, &reference.anchors, reference.alpha)?.z_perf,
    };
    Ok(at - best)
}

/// The LOO criterion at one alpha split into in-sample sub-optimality,
/// instability and the alpha-free SAA term, each averaged over `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub alpha: f64,
    pub saa_subopt: f64,
    pub instability: f64,
    pub saa0: f64,
    pub scale: f64,
    /// Unscaled LOO criterion from the same decisions.
    pub loo: f64,
    pub k: usize,
}

impl Decomposition {
    /// `scale * (saa_subopt + instability + saa0)`.
    pub fn scaled_total(&self) -> f64 {
        self.scale * (self.saa_subopt + self.instability + self.saa0)
    }

    /// `scale * loo / K`.
    pub fn scaled_loo(&self) -> f64 {
        self.scale * self.loo / self.k as f64
    }
}

fn decompose_problem(p: &SubproblemInstance, anchor: &[f64], alphas: &[f64]) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; alphas.len()];
    if p.n_obs() == 0 {
        return out;
    }
    let mut ws = Workspace::new(p.dim());
    let m = p.counts().as_slice();
    let x0 = ws.solve(p, anchor, 0.0, None);
    for (o, &alpha) in out.iter_mut().zip(alphas) {
        let xa = ws.solve(p, anchor, alpha, None);
        for (i, &mi) in m.iter().enumerate() {
            if mi == 0 {
                continue;
            }
            let w = mi as f64;
            let c0 = p.cost(x0, i);
            let ca = p.cost(xa, i);
            let cl = p.cost(ws.solve(p, anchor, alpha, Some(i)), i);
            o[0] += w * (ca - c0);
            o[1] += w * (cl - ca);
            o[2] += w * c0;
            o[3] += w * cl;
        }
    }
    out
}

/// Decomposition at each alpha. `scale` is `1 / (N lambda_bar)` when the
/// sampling rate is known and 1 otherwise.
pub fn decompose_curve(
    dataset: &Dataset,
    anchors: &AnchorSet,
    alphas: &[f64],
    scale: f64,
) -> Result<Vec<Decomposition>> {
    anchors.check(dataset)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let problems = dataset.problems();
    let per = par::map_range(problems.len(), |k| decompose_problem(&problems[k], anchors.get(k).probs(), alphas));
    let mut totals = vec![[0.0; 4]; alphas.len()];
    for curve in &per {
        for (t, v) in totals.iter_mut().zip(curve) {
            for j in 0..4 {
                t[j] += v[j];
            }
        }
    }
    let kf = problems.len() as f64;
    Ok(alphas
        .iter()
        .zip(totals)
        .map(|(&alpha, t)| Decomposition {
            alpha,
            saa_subopt: t[0] / kf,
            instability: t[1] / kf,
            saa0: t[2] / kf,
            scale,
            loo: t[3],
            k: problems.len(),
        })
        .collect())
}

pub fn decompose(dataset: &Dataset, anchors: &AnchorSet, alpha: f64, scale: f64) -> Result<Decomposition> {
    Ok(decompose_curve(dataset, anchors, &[alpha], scale)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Counts, Distribution};
    use crate::pooling::loo_criterion;
    use crate::problem::{CostModel, Decision};

    fn nv(s: f64, m: Vec<u32>, truth: Vec<f64>) -> SubproblemInstance {
        let support = (0..m.len()).map(|i| i as f64).collect();
        SubproblemInstance::new(support, CostModel::Newsvendor { s }, Counts::new(m))
            .unwrap()
            .with_truth(Distribution::new(truth).unwrap())
            .unwrap()
    }

    #[test]
    fn hand_evaluated_cost() {
        let p = nv(0.5, vec![0, 0], vec![0.5, 0.5]);
        assert_eq!(p.expected_cost(Decision::Level(1.0), p.truth().unwrap().probs()), 0.5);
    }

    #[test]
    fn missing_truth_is_reported() {
        let p = SubproblemInstance::new(vec![0.0, 1.0], CostModel::Mse, Counts::new(vec![1, 1])).unwrap();
        let data = Dataset::new(vec![p]).unwrap();
        let anchors = AnchorSet::shared(Distribution::uniform(2), 1);
        assert_eq!(z_perf(&data, &anchors, 0.0), Err(Error::MissingTruth(0)));
    }

    #[test]
    fn anchor_equal_to_truth_attains_full_information() {
        let truth = vec![0.1, 0.2, 0.3, 0.4];
        let data =
            Dataset::new(vec![nv(0.6, vec![3, 0, 0, 0], truth.clone()), nv(0.6, vec![0, 1, 0, 0], truth.clone())])
                .unwrap();
        let anchors = AnchorSet::shared(Distribution::new(truth).unwrap(), 2);
        let s = z_perf(&data, &anchors, f64::INFINITY).unwrap();
        assert_eq!(s.z_perf, s.z_full_info);
        let sel = select_alpha_oracle(&data, anchors.clone(), &AlphaGrid::default()).unwrap();
        assert_eq!(sub_opt(&data, &anchors, sel.alpha, &sel).unwrap(), 0.0);
        for &a in AlphaGrid::default().values() {
            assert!(sub_opt(&data, &anchors, a, &sel).unwrap() >= 0.0);
        }
    }

    #[test]
    fn decomposition_identity_and_endpoints() {
        let data = Dataset::new(vec![
            nv(0.8, vec![2, 0, 1, 4], vec![0.25; 4]),
            nv(0.3, vec![0, 1, 1, 0], vec![0.25; 4]),
            nv(0.5, vec![0, 0, 0, 0], vec![0.25; 4]),
        ])
        .unwrap();
        let anchors = AnchorSet::shared(Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap(), 3);
        let alphas = [0.0, 0.3, 1.0, 4.0, 50.0, f64::INFINITY];
        let dec = decompose_curve(&data, &anchors, &alphas, 0.5).unwrap();
        for d in &dec {
            let loo = loo_criterion(&data, &anchors, d.alpha).unwrap();
            assert!((d.scaled_total() - 0.5 * loo / 3.0).abs() < 1e-12);
            assert!(d.saa_subopt >= -1e-12);
        }
        assert_eq!(dec[0].saa_subopt, 0.0);
        assert_eq!(dec[5].instability, 0.0);
    }
}
