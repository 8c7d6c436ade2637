//! Monte-Carlo experiments on generated data.

use rand::Rng;
use rand_distr::{Binomial, Distribution as _, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::measure::{Counts, Distribution};
use crate::oracle::{decompose_curve, z_full_info, z_perf_curve};
use crate::par;
use crate::pooling::{grand_mean, AnchorSet};
use crate::problem::{Dataset, Decision, SubproblemInstance};
use crate::rng::stream;

use super::discretize::{discretize, Binning};
use super::ingest::ingest_demand_csv;
use super::policy::{run_policy, AnchorKind, Policy};
use super::report::{append_aggregates, ExperimentReport, RepId, ReportMeta, ReportRow};
use super::spec::{DataModel, SimSpec, TruthModel};

/// Per-problem truths and rates, fixed across reps.
#[derive(Debug, Clone)]
pub struct SimWorld {
    spec: SimSpec,
    supports: Vec<Vec<f64>>,
    truths: Vec<Distribution>,
    lambdas: Vec<f64>,
}

fn dirichlet(rng: &mut impl Rng, conc: &[f64]) -> Result<Distribution> {
    let mut x: Vec<f64> = conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map(|g| g.sample(rng)).map_err(|e| Error::InvalidConfig(e.to_string())))
        .collect::<Result<_>>()?;
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        // All draws underflowed; fall back to a vertex picked uniformly.
        let i = rng.random_range(0..x.len());
        return Ok(Distribution::point_mass(x.len(), i));
    }
    x.iter_mut().for_each(|v| *v /= total);
    Distribution::new(x)
}

fn draw_truth(model: &TruthModel, d: usize, seed: u64, k: usize) -> Result<Distribution> {
    let mut rng = stream(seed, &[k as u64], "truth");
    match model {
        TruthModel::DirichletUniform => dirichlet(&mut rng, &vec![1.0; d]),
        TruthModel::Dirichlet { concentration } => dirichlet(&mut rng, concentration),
        TruthModel::Fixed { probs } => Distribution::new(probs.clone()),
        TruthModel::Dispersed { s } => {
            let j = rng.random_range(1..d - 1);
            let mut p = vec![0.0; d];
            p[j] = *s;
            p[d - 1] = 1.0 - s;
            Distribution::new(p)
        }
        TruthModel::TwoPoint { lo, hi } => {
            let q = if hi > lo { rng.random_range(*lo..=*hi) } else { *lo };
            Distribution::new(vec![1.0 - q, q])
        }
        TruthModel::Mixture { components } => {
            let u: f64 = stream(seed, &[k as u64], "component").random();
            let mut acc = 0.0;
            let mut chosen = &components[components.len() - 1].model;
            for c in components {
                acc += c.weight;
                if u < acc {
                    chosen = &c.model;
                    break;
                }
            }
            draw_truth(chosen, d, seed, k)
        }
        TruthModel::FromEmpirical { .. } => unreachable!("handled by the caller"),
    }
}

fn binning_or_fallback(values: &[f64], d: usize) -> Result<Binning> {
    match discretize(values, d) {
        Err(Error::DegenerateRange(v)) => {
            log::warn!("constant demand series at {v}; using a unit-width range");
            Binning::new(v - 0.5, v + 0.5, d)
        }
        other => other,
    }
}

impl SimWorld {
    pub fn new(spec: &SimSpec) -> Result<Self> {
        spec.validate()?;
        let k = spec.k;
        let (supports, truths) = if let TruthModel::FromEmpirical { path, cleaning } = &spec.truth_model {
            let data = ingest_demand_csv(path, cleaning)?;
            let stores: Vec<_> = data.stores.into_iter().filter(|s| !s.is_empty()).collect();
            if stores.len() < k {
                return Err(Error::InsufficientData(format!("{} stores with data, K = {k}", stores.len())));
            }
            let mut supports = Vec::with_capacity(k);
            let mut truths = Vec::with_capacity(k);
            for s in &stores[..k] {
                let b = binning_or_fallback(&s.values, spec.d)?;
                let m = b.counts(&s.values);
                truths.push(crate::measure::empirical_distribution(&m)?);
                supports.push(b.support());
            }
            (supports, truths)
        } else {
            let support = spec.support_points();
            let truths = par::map_range(k, |j| draw_truth(&spec.truth_model, spec.d, spec.seed, j))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            (vec![support; k], truths)
        };
        let lambdas = match spec.data_model {
            DataModel::PoissonN { lambda_range: Some([lo, hi]), .. } if hi > lo => {
                (0..k).map(|j| stream(spec.seed, &[j as u64], "lambda").random_range(lo..=hi)).collect()
            }
            DataModel::PoissonN { lambda_range: Some([lo, _]), .. } => vec![lo; k],
            _ => vec![1.0; k],
        };
        Ok(Self { spec: spec.clone(), supports, truths, lambdas })
    }

    pub fn truths(&self) -> &[Distribution] {
        &self.truths
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// The `1 / (N lambda_bar)` factor that turns the LOO sum into an unbiased
    /// performance estimate under Poisson sampling (1 when it is undefined).
    pub fn loo_scale(&self) -> f64 {
        let lb = self.lambdas.iter().sum::<f64>() / self.lambdas.len() as f64;
        let n = match self.spec.data_model {
            DataModel::PoissonN { n, .. } => n,
            DataModel::FixedN { n } => n as f64,
        };
        if n > 0.0 {
            1.0 / (n * lb)
        } else {
            1.0
        }
    }

    /// Counts for problem `k` in `rep`, from its own random stream.
    pub fn draw_counts(&self, k: usize, rep: usize) -> Counts {
        let idx = [k as u64, rep as u64];
        let n = match self.spec.data_model {
            DataModel::FixedN { n } => n,
            DataModel::PoissonN { n, .. } => {
                let rate = n * self.lambdas[k];
                if rate > 0.0 {
                    Poisson::new(rate).expect("positive rate").sample(&mut stream(self.spec.seed, &idx, "n")) as u64
                } else {
                    0
                }
            }
        };
        multinomial(&mut stream(self.spec.seed, &idx, "counts"), n, self.truths[k].probs())
    }

    /// The dataset of `rep`, with truths and weights attached.
    pub fn instance(&self, rep: usize) -> Result<Dataset> {
        let problems = par::map_range(self.spec.k, |k| -> Result<SubproblemInstance> {
            SubproblemInstance::new(self.supports[k].clone(), self.spec.cost.clone(), self.draw_counts(k, rep))?
                .with_weight(self.lambdas[k])?
                .with_truth(self.truths[k].clone())
        });
        Dataset::new(problems.into_iter().collect::<Result<Vec<_>>>()?)
    }
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial(rng: &mut impl Rng, n: u64, p: &[f64]) -> Counts {
    let mut m = vec![0u32; p.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            m[i] = left as u32;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = Binomial::new(left, q).expect("probability in [0, 1]").sample(rng);
        m[i] = x as u32;
        left -= x;
        mass -= pi;
    }
    Counts::new(m)
}

pub fn gen_instance(spec: &SimSpec, rep: usize) -> Result<Dataset> {
    SimWorld::new(spec)?.instance(rep)
}

/// `(1/K) sum (lambda_k / lambda_bar) p_k^T c_k(x_k)`.
pub fn true_performance(dataset: &Dataset, decisions: &[Decision]) -> Result<f64> {
    let lb = dataset.lambda_bar();
    let mut total = 0.0;
    for (k, (p, &x)) in dataset.problems().iter().zip(decisions).enumerate() {
        let truth = p.truth().ok_or(Error::MissingTruth(k))?;
        total += p.weight() / lb * p.expected_cost(x, truth.probs());
    }
    Ok(total / dataset.len() as f64)
}

pub(crate) fn benefit_pct(z_saa: f64, z: f64) -> f64 {
    if z_saa == 0.0 {
        0.0
    } else {
        100.0 * (z_saa - z) / z_saa
    }
}

pub fn report_meta(hash: String, seed: u64, started: String) -> ReportMeta {
    ReportMeta {
        spec_hash: hash,
        seed,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Runs every policy on every rep and reports `z_perf`, `benefit_pct` (over
/// SAA) and `loss_full_info` (`z_perf - z*`), plus mean and standard error.
pub fn run_simulation(spec: &SimSpec) -> Result<ExperimentReport> {
    let started = chrono::Utc::now().to_rfc3339();
    let world = SimWorld::new(spec)?;
    let grid = spec.alpha_grid.resolve()?;
    let mut rows = Vec::new();
    for rep in 0..spec.reps {
        let dataset = world.instance(rep)?;
        let ctx = spec.settings.context(grid.clone(), spec.seed, rep)?;
        let z_star = z_full_info(&dataset)?;
        let saa = run_policy(&dataset, Policy::Saa, &ctx)?;
        let z_saa = true_performance(&dataset, &saa.decisions)?;
        for &policy in &spec.policies {
            let (alpha, z) = if policy == Policy::Saa {
                (saa.alpha, z_saa)
            } else {
                let out = run_policy(&dataset, policy, &ctx)?;
                (out.alpha, true_performance(&dataset, &out.decisions)?)
            };
            log::debug!("rep {rep} {policy}: alpha={alpha:?} z={z}");
            for (metric, value) in
                [("z_perf", z), ("benefit_pct", benefit_pct(z_saa, z)), ("loss_full_info", z - z_star)]
            {
                rows.push(ReportRow {
                    rep: RepId::Index(rep),
                    k: spec.k,
                    policy: policy.to_string(),
                    alpha,
                    metric: metric.into(),
                    value,
                });
            }
        }
    }
    append_aggregates(&mut rows);
    Ok(ExperimentReport { rows, meta: report_meta(spec.hash(), spec.seed, started) })
}

/// Data-driven diagnostic curves over the alpha grid for each rep: in-sample
/// SAA sub-optimality, instability, the alpha-free SAA term, the scaled LOO
/// criterion and the true performance. Uses the anchor of the first pooled
/// policy in the spec (grand mean if none).
pub fn run_diagnostics(spec: &SimSpec) -> Result<ExperimentReport> {
    let started = chrono::Utc::now().to_rfc3339();
    let world = SimWorld::new(spec)?;
    let grid = spec.alpha_grid.resolve()?;
    let kind = spec
        .policies
        .iter()
        .find_map(|p| match p {
            Policy::Ssaa(a) | Policy::SsaaKFold(a, _) | Policy::Oracle(a) | Policy::Js(a) if *a != AnchorKind::Beta => {
                Some(*a)
            }
            _ => None,
        })
        .unwrap_or(AnchorKind::GrandMean);
    let label = Policy::Ssaa(kind).to_string();
    let scale = world.loo_scale();
    let mut rows = Vec::new();
    for rep in 0..spec.reps {
        let dataset = world.instance(rep)?;
        let anchors = match kind {
            AnchorKind::GrandMean => AnchorSet::shared(grand_mean(&dataset)?, dataset.len()),
            _ => {
                let ctx = spec.settings.context(grid.clone(), spec.seed, rep)?;
                let d = spec.d;
                AnchorSet::shared(ctx.fixed_anchor.clone().unwrap_or_else(|| Distribution::uniform(d)), dataset.len())
            }
        };
        let dec = decompose_curve(&dataset, &anchors, grid.values(), scale)?;
        let perf = z_perf_curve(&dataset, &anchors, grid.values())?;
        for (d, z) in dec.iter().zip(perf) {
            for (metric, value) in [
                ("saa_subopt", d.saa_subopt),
                ("instability", d.instability),
                ("saa0", d.saa0),
                ("loo_scaled", d.scaled_loo()),
                ("z_perf", z),
            ] {
                rows.push(ReportRow {
                    rep: RepId::Index(rep),
                    k: spec.k,
                    policy: label.clone(),
                    alpha: Some(d.alpha),
                    metric: metric.into(),
                    value,
                });
            }
        }
    }
    Ok(ExperimentReport { rows, meta: report_meta(spec.hash(), spec.seed, started) })
}
