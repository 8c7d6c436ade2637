//! Modified leave-one-out and k-fold cross-validation criteria.
//!
//! The anchor is computed once from the full data and held fixed in every
//! fold; only the subproblem's own counts lose the held-out observations.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::measure::check_alpha;
use crate::par;
use crate::problem::{Dataset, SubproblemInstance};
use crate::rng;
use crate::solvers::Workspace;

use super::anchor::{anchor_candidates, resolve_anchor, AnchorSet, AnchorSpec};
use super::grid::AlphaGrid;
use super::selection::{select_from_curves, Method, PoolingSelection};

/// `sum_i m_i c_i(x(alpha, anchor, m - e_i))` for one subproblem at each alpha.
pub fn loo_problem_curve(problem: &SubproblemInstance, anchor: &[f64], alphas: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; alphas.len()];
    if problem.n_obs() == 0 {
        return out;
    }
    let mut ws = Workspace::new(problem.dim());
    let m = problem.counts().as_slice();
    for (o, &alpha) in out.iter_mut().zip(alphas) {
        let mut total = 0.0;
        for (i, &mi) in m.iter().enumerate() {
            if mi == 0 {
                continue;
            }
            let x = ws.solve(problem, anchor, alpha, Some(i));
            total += mi as f64 * problem.cost(x, i);
        }
        *o = total;
    }
    out
}

/// Per-subproblem curves, in subproblem order.
pub fn loo_problem_curves(dataset: &Dataset, anchors: &AnchorSet, alphas: &[f64]) -> Result<Vec<Vec<f64>>> {
    anchors.check(dataset)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let problems = dataset.problems();
    Ok(par::map_range(problems.len(), |k| loo_problem_curve(&problems[k], anchors.get(k).probs(), alphas)))
}

/// Unscaled modified-LOO criterion at each alpha.
pub fn loo_curve(dataset: &Dataset, anchors: &AnchorSet, alphas: &[f64]) -> Result<Vec<f64>> {
    Ok(sum_curves(&loo_problem_curves(dataset, anchors, alphas)?, alphas.len()))
}

/// Unscaled modified-LOO criterion
/// `sum_k sum_i m_ki c_ki(x_k(alpha, anchor_k, m_k - e_i))`.
pub fn loo_criterion(dataset: &Dataset, anchors: &AnchorSet, alpha: f64) -> Result<f64> {
    Ok(loo_curve(dataset, anchors, &[alpha])?[0])
}

/// Adds per-problem curves in subproblem order.
pub(crate) fn sum_curves(curves: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for c in curves {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    out
}

/// Picks alpha on `grid` minimizing the LOO criterion with a fixed anchor.
pub fn select_alpha_loo(dataset: &Dataset, spec: &AnchorSpec, grid: &AlphaGrid) -> Result<PoolingSelection> {
    let anchors = resolve_anchor(spec, dataset)?;
    select_alpha_loo_with(dataset, anchors, grid)
}

pub fn select_alpha_loo_with(dataset: &Dataset, anchors: AnchorSet, grid: &AlphaGrid) -> Result<PoolingSelection> {
    let curve = loo_curve(dataset, &anchors, grid.values())?;
    Ok(select_from_curves(grid.values(), &[curve], vec![anchors], Method::Loo))
}

/// Jointly picks the anchor among `candidates` and alpha on `grid`.
pub fn select_joint_hloo(dataset: &Dataset, candidates: Vec<AnchorSet>, grid: &AlphaGrid) -> Result<PoolingSelection> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let curves = candidates.iter().map(|c| loo_curve(dataset, c, grid.values())).collect::<Result<Vec<_>>>()?;
    Ok(select_from_curves(grid.values(), &curves, candidates, Method::Loo))
}

/// [`select_joint_hloo`] over the candidates described by an anchor spec.
pub fn select_joint_hloo_spec(dataset: &Dataset, spec: &AnchorSpec, grid: &AlphaGrid) -> Result<PoolingSelection> {
    select_joint_hloo(dataset, anchor_candidates(spec, dataset)?, grid)
}

/// Seeded fold id of each expanded observation of problem `k`. Observations
/// are listed support-index-major, shuffled, then cut into `folds` contiguous
/// blocks of near-equal size.
pub fn fold_assignment(problem: &SubproblemInstance, k: usize, folds: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut obs = problem.counts().expand();
    let mut rng = rng::stream(seed, &[k as u64], "kfold");
    obs.shuffle(&mut rng);
    let n = obs.len();
    let mut out = Vec::with_capacity(n);
    for f in 0..folds {
        for &i in &obs[f * n / folds..(f + 1) * n / folds] {
            out.push((f, i));
        }
    }
    out
}

fn kfold_problem_curve(
    problem: &SubproblemInstance,
    k: usize,
    anchor: &[f64],
    alphas: &[f64],
    folds: usize,
    seed: u64,
) -> Vec<f64> {
    let mut out = vec![0.0; alphas.len()];
    if problem.n_obs() == 0 {
        return out;
    }
    let assignment = fold_assignment(problem, k, folds, seed);
    let d = problem.dim();
    let mut ws = Workspace::new(d);
    let mut train = vec![0u32; d];
    let mut held = vec![0u32; d];
    for f in 0..folds {
        held.iter_mut().for_each(|h| *h = 0);
        for &(g, i) in &assignment {
            if g == f {
                held[i] += 1;
            }
        }
        if held.iter().all(|&h| h == 0) {
            continue;
        }
        for ((t, &m), &h) in train.iter_mut().zip(problem.counts().as_slice()).zip(&held) {
            *t = m - h;
        }
        for (o, &alpha) in out.iter_mut().zip(alphas) {
            let x = ws.solve_counts(problem, &train, anchor, alpha);
            *o += held
                .iter()
                .enumerate()
                .filter(|(_, &h)| h > 0)
                .map(|(i, &h)| h as f64 * problem.cost(x, i))
                .sum::<f64>();
        }
    }
    out
}

/// Modified k-fold criterion at each alpha. Alpha is not rescaled for the
/// smaller training folds.
pub fn kfold_curve(
    dataset: &Dataset,
    anchors: &AnchorSet,
    alphas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("k-fold needs at least 2 folds, got {folds}")));
    }
    anchors.check(dataset)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let problems = dataset.problems();
    let curves = par::map_range(problems.len(), |k| {
        kfold_problem_curve(&problems[k], k, anchors.get(k).probs(), alphas, folds, seed)
    });
    Ok(sum_curves(&curves, alphas.len()))
}

pub fn kfold_criterion(dataset: &Dataset, anchors: &AnchorSet, alpha: f64, folds: usize, seed: u64) -> Result<f64> {
    Ok(kfold_curve(dataset, anchors, &[alpha], folds, seed)?[0])
}

pub fn select_alpha_kfold(
    dataset: &Dataset,
    anchors: AnchorSet,
    grid: &AlphaGrid,
    folds: usize,
    seed: u64,
) -> Result<PoolingSelection> {
    let curve = kfold_curve(dataset, &anchors, grid.values(), folds, seed)?;
    Ok(select_from_curves(grid.values(), &[curve], vec![anchors], Method::KFold { folds, seed }))
}
