//! Named policies and how each turns a dataset into decisions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{ks_select_rho, ks_solve, KsConfig};
use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::oracle::{select_alpha_oracle, select_joint_oracle};
use crate::par;
use crate::pooling::{
    alpha_js, anchor_candidates, grand_mean, select_alpha_kfold, select_alpha_loo_with, select_joint_hloo, AlphaGrid,
    AnchorSet, AnchorSpec,
};
use crate::problem::{CostModel, Dataset, Decision};
use crate::solvers::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorKind {
    Fixed,
    Beta,
    GrandMean,
}

impl AnchorKind {
    fn tag(self) -> &'static str {
        match self {
            AnchorKind::Fixed => "Fixed",
            AnchorKind::Beta => "Beta",
            AnchorKind::GrandMean => "GM",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "Fixed" => Some(AnchorKind::Fixed),
            "Beta" => Some(AnchorKind::Beta),
            "GM" => Some(AnchorKind::GrandMean),
            _ => None,
        }
    }
}

/// A policy name such as `SAA`, `KS`, `JS-GM`, `S-SAA-Fixed`,
/// `S-SAA-GM-CV5` or `Oracle-Beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    Saa,
    Ks,
    Js(AnchorKind),
    Ssaa(AnchorKind),
    SsaaKFold(AnchorKind, usize),
    Oracle(AnchorKind),
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Saa => f.write_str("SAA"),
            Policy::Ks => f.write_str("KS"),
            Policy::Js(a) => write!(f, "JS-{}", a.tag()),
            Policy::Ssaa(a) => write!(f, "S-SAA-{}", a.tag()),
            Policy::SsaaKFold(a, k) => write!(f, "S-SAA-{}-CV{k}", a.tag()),
            Policy::Oracle(a) => write!(f, "Oracle-{}", a.tag()),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown policy {s:?}"));
        match s {
            "SAA" => return Ok(Policy::Saa),
            "KS" => return Ok(Policy::Ks),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("JS-") {
            return match AnchorKind::parse(rest) {
                Some(AnchorKind::Beta) | None => Err(bad()),
                Some(a) => Ok(Policy::Js(a)),
            };
        }
        if let Some(rest) = s.strip_prefix("Oracle-") {
            return AnchorKind::parse(rest).map(Policy::Oracle).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("S-SAA-") {
            if let Some(a) = AnchorKind::parse(rest) {
                return Ok(Policy::Ssaa(a));
            }
            let (anchor, folds) = rest.split_once("-CV").ok_or_else(bad)?;
            let folds: usize = folds.parse().map_err(|_| bad())?;
            if folds < 2 {
                return Err(bad());
            }
            return AnchorKind::parse(anchor).map(|a| Policy::SsaaKFold(a, folds)).ok_or_else(bad);
        }
        Err(bad())
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> Self {
        p.to_string()
    }
}

impl Policy {
    pub fn needs_truth(&self) -> bool {
        matches!(self, Policy::Oracle(_))
    }
}

/// Settings shared by all policies in one experiment.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub grid: AlphaGrid,
    /// Anchor for the `Fixed` policies; uniform when `None`.
    pub fixed_anchor: Option<Distribution>,
    pub beta_means: Vec<f64>,
    pub beta_shapes: Vec<f64>,
    pub ks: KsConfig,
    pub seed: u64,
    pub rep: usize,
}

impl PolicyContext {
    pub fn new(grid: AlphaGrid, seed: u64, rep: usize) -> Self {
        let (beta_means, beta_shapes) = match AnchorSpec::default_beta_family() {
            AnchorSpec::BetaFamily { means, shapes } => (means, shapes),
            _ => unreachable!(),
        };
        Self { grid, fixed_anchor: None, beta_means, beta_shapes, ks: KsConfig::default(), seed, rep }
    }

    fn anchor_spec(&self, kind: AnchorKind, dataset: &Dataset) -> Result<AnchorSpec> {
        Ok(match kind {
            AnchorKind::Fixed => {
                let d = dataset
                    .common_dim()
                    .ok_or_else(|| Error::InvalidConfig("a fixed anchor needs a common support size".into()))?;
                AnchorSpec::Fixed { dist: self.fixed_anchor.clone().unwrap_or_else(|| Distribution::uniform(d)) }
            }
            AnchorKind::GrandMean => AnchorSpec::GrandMean,
            AnchorKind::Beta => {
                AnchorSpec::BetaFamily { means: self.beta_means.clone(), shapes: self.beta_shapes.clone() }
            }
        })
    }

    fn single_anchor(&self, kind: AnchorKind, dataset: &Dataset) -> Result<AnchorSet> {
        let mut c = anchor_candidates(&self.anchor_spec(kind, dataset)?, dataset)?;
        if c.len() != 1 {
            return Err(Error::InvalidConfig(format!("{} anchors need a joint search", kind.tag())));
        }
        Ok(c.pop().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub policy: Policy,
    /// Selected pooling amount; `None` for KS.
    pub alpha: Option<f64>,
    pub decisions: Vec<Decision>,
}

/// Decisions `x_k(alpha, anchor_k, m_k)` for every subproblem.
pub fn pooled_decisions(dataset: &Dataset, anchors: &AnchorSet, alpha: f64) -> Vec<Decision> {
    let problems = dataset.problems();
    par::map_range(problems.len(), |k| {
        Workspace::new(problems[k].dim()).solve(&problems[k], anchors.get(k).probs(), alpha, None)
    })
}

fn anchor_means(dataset: &Dataset, anchors: &AnchorSet) -> Vec<f64> {
    dataset.problems().iter().zip(anchors.iter()).map(|(p, a)| a.dot(p.support())).collect()
}

pub fn run_policy(dataset: &Dataset, policy: Policy, ctx: &PolicyContext) -> Result<PolicyOutcome> {
    let (alpha, decisions) = match policy {
        Policy::Saa => {
            // Problems without data fall back to the grand-mean solution.
            let anchors = AnchorSet::shared(grand_mean(dataset)?, dataset.len());
            (Some(0.0), pooled_decisions(dataset, &anchors, 0.0))
        }
        Policy::Ks => (None, ks_decisions(dataset, ctx)?),
        Policy::Js(kind) => {
            let anchors = ctx.single_anchor(kind, dataset)?;
            let alpha = match alpha_js(dataset, &anchor_means(dataset, &anchors)) {
                Ok(a) => a,
                Err(Error::InsufficientData(msg)) => {
                    log::warn!("{policy}: {msg}; using alpha = 0");
                    0.0
                }
                Err(e) => return Err(e),
            };
            (Some(alpha), pooled_decisions(dataset, &anchors, alpha))
        }
        Policy::Ssaa(AnchorKind::Beta) => {
            let candidates = anchor_candidates(&ctx.anchor_spec(AnchorKind::Beta, dataset)?, dataset)?;
            let sel = select_joint_hloo(dataset, candidates, &ctx.grid)?;
            (Some(sel.alpha), pooled_decisions(dataset, &sel.anchors, sel.alpha))
        }
        Policy::Ssaa(kind) => {
            let sel = select_alpha_loo_with(dataset, ctx.single_anchor(kind, dataset)?, &ctx.grid)?;
            (Some(sel.alpha), pooled_decisions(dataset, &sel.anchors, sel.alpha))
        }
        Policy::SsaaKFold(AnchorKind::Beta, _) => {
            return Err(Error::InvalidConfig("k-fold selection with the Beta family is not supported".into()));
        }
        Policy::SsaaKFold(kind, folds) => {
            let seed = crate::rng::derive_seed(ctx.seed, &[ctx.rep as u64], "kfold");
            let sel = select_alpha_kfold(dataset, ctx.single_anchor(kind, dataset)?, &ctx.grid, folds, seed)?;
            (Some(sel.alpha), pooled_decisions(dataset, &sel.anchors, sel.alpha))
        }
        Policy::Oracle(AnchorKind::Beta) => {
            let candidates = anchor_candidates(&ctx.anchor_spec(AnchorKind::Beta, dataset)?, dataset)?;
            let sel = select_joint_oracle(dataset, candidates, &ctx.grid)?;
            (Some(sel.alpha), pooled_decisions(dataset, &sel.anchors, sel.alpha))
        }
        Policy::Oracle(kind) => {
            let sel = select_alpha_oracle(dataset, ctx.single_anchor(kind, dataset)?, &ctx.grid)?;
            (Some(sel.alpha), pooled_decisions(dataset, &sel.anchors, sel.alpha))
        }
    };
    Ok(PolicyOutcome { policy, alpha, decisions })
}

fn ks_decisions(dataset: &Dataset, ctx: &PolicyContext) -> Result<Vec<Decision>> {
    let gm = grand_mean(dataset)?;
    let problems = dataset.problems();
    let out = par::map_range(problems.len(), |k| -> Result<Decision> {
        let p = &problems[k];
        let s = match p.cost_model() {
            CostModel::Newsvendor { s } => *s,
            _ => return Err(Error::InvalidConfig("KS applies to newsvendor problems only".into())),
        };
        if p.n_obs() == 0 {
            return Ok(Workspace::new(p.dim()).solve(p, gm.probs(), f64::INFINITY, None));
        }
        let support = p.support();
        let samples: Vec<f64> = p.counts().expand().into_iter().map(|i| support[i]).collect();
        let bounds = (support[0], support[support.len() - 1]);
        let stream = ((ctx.rep as u64) << 32) | k as u64;
        let rho = ks_select_rho(&samples, s, bounds, &ctx.ks, stream)?;
        Ok(Decision::Level(ks_solve(&samples, rho, s, bounds)?))
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in [
            "SAA",
            "KS",
            "JS-Fixed",
            "JS-GM",
            "S-SAA-Fixed",
            "S-SAA-Beta",
            "S-SAA-GM",
            "S-SAA-GM-CV5",
            "Oracle-Fixed",
            "Oracle-Beta",
            "Oracle-GM",
        ] {
            let p: Policy = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
        }
        for bad in ["JS-Beta", "S-SAA-GM-CV1", "S-SAA-XX", "saa"] {
            assert!(bad.parse::<Policy>().is_err(), "{bad}");
        }
    }
}
