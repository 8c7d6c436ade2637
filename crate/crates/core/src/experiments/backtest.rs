//! Repeated random-subsampling backtests on historical demand.

use std::sync::Arc;

use chrono::NaiveDate;
use rand::seq::{index, SliceRandom};

use crate::benchmarks::{ks_select_rho, ks_solve};
use crate::error::{Error, Result};
use crate::measure::empirical_distribution;
use crate::par;
use crate::pooling::{argmin_trace, TracePoint};
use crate::problem::{newsvendor_cost, CostModel, Dataset, SubproblemInstance};
use crate::rng::{derive_seed, stream};
use crate::solvers::{continuous_newsvendor, AffineCdf, Cdf, EmpiricalCdf, ScaledBetaCdf, UniformCdf};

use super::discretize::Binning;
use super::ingest::{ingest_demand_csv, DemandData, StoreSeries};
use super::policy::{run_policy, AnchorKind, Policy, PolicyContext};
use super::report::{append_aggregates, ExperimentReport, RepId, ReportRow};
use super::sim::{benefit_pct, report_meta};
use super::spec::{BacktestSpec, Bins};

struct Store<'a> {
    series: &'a StoreSeries,
    lo: f64,
    hi: f64,
}

impl<'a> Store<'a> {
    fn new(series: &'a StoreSeries) -> Self {
        let lo = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = series.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Store { series, lo, hi }
    }

    fn value_on(&self, d: NaiveDate) -> Option<f64> {
        self.series.dates.binary_search(&d).ok().map(|i| self.series.values[i])
    }
}

/// Train and test demands of one store in one rep.
struct Split {
    train: Vec<f64>,
    test: Vec<f64>,
}

/// Reads the CSV named by the spec (or `data`, which takes precedence) and
/// runs the backtest.
pub fn run_backtest_file(spec: &BacktestSpec, data: Option<&std::path::Path>) -> Result<ExperimentReport> {
    let path = data
        .map(|p| p.to_path_buf())
        .or_else(|| spec.csv_path.clone())
        .ok_or_else(|| Error::InvalidConfig("no demand CSV given".into()))?;
    let demand = ingest_demand_csv(&path, &spec.cleaning)?;
    run_backtest(spec, &demand)
}

/// For each rep, samples `n_train` training and `n_test` disjoint test days
/// per store from the set of all dates (days a store has no record for are
/// simply missing), trains every policy and reports the mean out-of-sample
/// newsvendor cost over stores (`test_cost`) and `benefit_pct` over SAA.
pub fn run_backtest(spec: &BacktestSpec, demand: &DemandData) -> Result<ExperimentReport> {
    let started = chrono::Utc::now().to_rfc3339();
    spec.validate()?;
    let need = spec.n_train + spec.n_test;
    let stores: Vec<Store> = demand
        .stores
        .iter()
        .filter(|s| {
            let ok = s.len() >= need;
            if !ok {
                log::warn!("store {}: {} observations, need {need}; skipped", s.id, s.len());
            }
            ok
        })
        .map(Store::new)
        .collect();
    if stores.is_empty() {
        return Err(Error::InsufficientData("no store has enough observations".into()));
    }
    let dates = {
        let mut d: Vec<NaiveDate> = stores.iter().flat_map(|s| s.series.dates.iter().copied()).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    if dates.len() < need {
        return Err(Error::InsufficientData(format!("{} distinct dates, need {need}", dates.len())));
    }
    let grid = spec.alpha_grid.resolve()?;
    let k = stores.len();
    let mut rows = Vec::new();
    for rep in 0..spec.reps {
        let splits: Vec<Split> = par::map_range(k, |j| {
            let mut rng = stream(spec.seed, &[j as u64, rep as u64], "days");
            let picked = index::sample(&mut rng, dates.len(), need).into_vec();
            let pick = |ix: &[usize]| ix.iter().filter_map(|&i| stores[j].value_on(dates[i])).collect::<Vec<f64>>();
            Split { train: pick(&picked[..spec.n_train]), test: pick(&picked[spec.n_train..]) }
        });
        let ctx = spec.settings.context(grid.clone(), spec.seed, rep)?;
        let decide = |policy: Policy| -> Result<(Option<f64>, Vec<f64>)> {
            match spec.d {
                Bins::Finite(d) => discrete_policy(&stores, &splits, d, spec.s, policy, &ctx),
                Bins::Continuous => continuous_policy(&stores, &splits, spec.s, policy, &ctx),
            }
        };
        let (_, saa) = decide(Policy::Saa)?;
        let z_saa = test_cost(&splits, &saa, spec.s);
        for &policy in &spec.policies {
            let (alpha, z) = if policy == Policy::Saa {
                (Some(0.0), z_saa)
            } else {
                let (alpha, x) = decide(policy)?;
                (alpha, test_cost(&splits, &x, spec.s))
            };
            for (metric, value) in [("test_cost", z), ("benefit_pct", benefit_pct(z_saa, z))] {
                rows.push(ReportRow {
                    rep: RepId::Index(rep),
                    k,
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

/// Shrunken-SAA newsvendor decisions trained on each store's full history,
/// with the pooling amount chosen by leave-one-out. Returns the selected
/// amount and one `(store id, decision)` pair per nonempty store.
pub fn solve_demand(
    demand: &DemandData,
    d: Bins,
    s: f64,
    kind: AnchorKind,
    ctx: &PolicyContext,
) -> Result<(f64, Vec<(String, f64)>)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidCost(format!("critical fractile {s} outside (0,1)")));
    }
    let stores: Vec<Store> = demand.stores.iter().filter(|st| !st.is_empty()).map(Store::new).collect();
    if stores.is_empty() {
        return Err(Error::InsufficientData("no store has data".into()));
    }
    let splits: Vec<Split> =
        stores.iter().map(|st| Split { train: st.series.values.clone(), test: Vec::new() }).collect();
    let (alpha, x) = match d {
        Bins::Finite(d) => discrete_policy(&stores, &splits, d, s, Policy::Ssaa(kind), ctx)?,
        Bins::Continuous => continuous_policy(&stores, &splits, s, Policy::Ssaa(kind), ctx)?,
    };
    let ids = stores.iter().map(|st| st.series.id.clone());
    Ok((alpha.unwrap_or(0.0), ids.zip(x).collect()))
}

/// Average over stores with test data of the mean test-day cost.
fn test_cost(splits: &[Split], decisions: &[f64], s: f64) -> f64 {
    let mut total = 0.0;
    let mut used = 0usize;
    for (sp, &x) in splits.iter().zip(decisions) {
        if sp.test.is_empty() {
            continue;
        }
        total += sp.test.iter().map(|&v| newsvendor_cost(s, x, v)).sum::<f64>() / sp.test.len() as f64;
        used += 1;
    }
    if used == 0 {
        0.0
    } else {
        total / used as f64
    }
}

fn store_binning(store: &Store, d: usize) -> Result<Binning> {
    if store.hi > store.lo {
        Binning::new(store.lo, store.hi, d)
    } else {
        log::warn!("store {}: constant demand; using a unit-width range", store.series.id);
        Binning::new(store.lo - 0.5, store.lo + 0.5, d)
    }
}

/// Binned problems: support at bin midpoints over each store's full-history
/// range, counts from the training days, and the binned full history as the
/// truth proxy for oracle policies.
fn discrete_policy(
    stores: &[Store],
    splits: &[Split],
    d: usize,
    s: f64,
    policy: Policy,
    ctx: &PolicyContext,
) -> Result<(Option<f64>, Vec<f64>)> {
    let problems = par::map_range(stores.len(), |j| -> Result<SubproblemInstance> {
        let b = store_binning(&stores[j], d)?;
        let truth = empirical_distribution(&b.counts(&stores[j].series.values))?;
        SubproblemInstance::new(b.support(), CostModel::Newsvendor { s }, b.counts(&splits[j].train))?.with_truth(truth)
    });
    let dataset = Dataset::new(problems.into_iter().collect::<Result<Vec<_>>>()?)?;
    let out = run_policy(&dataset, policy, ctx)?;
    Ok((out.alpha, out.decisions.iter().map(|x| x.as_f64()).collect()))
}

type DynCdf = Arc<dyn Cdf + Send>;

/// Pooled training data of all stores, each rescaled from its full-history
/// range to `[0, 1]`, mapped back onto every store's own range.
fn grand_mean_cdfs(stores: &[Store], splits: &[Split]) -> Vec<DynCdf> {
    let mut pooled = Vec::new();
    for (st, sp) in stores.iter().zip(splits) {
        let w = st.hi - st.lo;
        pooled.extend(sp.train.iter().map(|&v| if w > 0.0 { ((v - st.lo) / w).clamp(0.0, 1.0) } else { 0.5 }));
    }
    if pooled.is_empty() {
        return uniform_cdfs(stores);
    }
    let base = Arc::new(EmpiricalCdf::new(pooled));
    stores.iter().map(|st| Arc::new(AffineCdf { base: base.clone(), lo: st.lo, hi: st.hi }) as DynCdf).collect()
}

fn uniform_cdfs(stores: &[Store]) -> Vec<DynCdf> {
    stores.iter().map(|st| Arc::new(UniformCdf { lo: st.lo, hi: st.hi }) as DynCdf).collect()
}

fn beta_cdfs(stores: &[Store], ctx: &PolicyContext) -> Vec<Vec<DynCdf>> {
    let mut out = Vec::new();
    for &mu in &ctx.beta_means {
        for &theta in &ctx.beta_shapes {
            let b = theta.max(crate::pooling::MIN_BETA_SHAPE);
            let a = if mu >= 1.0 { f64::INFINITY } else { mu * b / (1.0 - mu) };
            out.push(
                stores.iter().map(|st| Arc::new(ScaledBetaCdf { a, b, lo: st.lo, hi: st.hi }) as DynCdf).collect(),
            );
        }
    }
    out
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// LOO sum for one store at each alpha, grouping tied samples.
fn continuous_loo(train: &[f64], anchor: &dyn Cdf, alphas: &[f64], s: f64) -> Vec<f64> {
    let sorted = sorted(train);
    let mut out = vec![0.0; alphas.len()];
    let mut i = 0;
    let mut rest = Vec::with_capacity(sorted.len());
    while i < sorted.len() {
        let y = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == y {
            j += 1;
        }
        rest.clear();
        rest.extend_from_slice(&sorted[..i]);
        rest.extend_from_slice(&sorted[i + 1..]);
        let mult = (j - i) as f64;
        for (o, &a) in out.iter_mut().zip(alphas) {
            *o += mult * newsvendor_cost(s, continuous_newsvendor(&rest, anchor, a, s), y);
        }
        i = j;
    }
    out
}

fn continuous_kfold(
    train: &[f64],
    anchor: &dyn Cdf,
    alphas: &[f64],
    s: f64,
    folds: usize,
    seed: u64,
    k: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; alphas.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut stream(seed, &[k as u64], "kfold"));
    let n = train.len();
    for f in 0..folds {
        let (a, b) = (f * n / folds, (f + 1) * n / folds);
        if a == b {
            continue;
        }
        let fit = sorted(&order[..a].iter().chain(&order[b..]).map(|&i| train[i]).collect::<Vec<_>>());
        for (o, &alpha) in out.iter_mut().zip(alphas) {
            let x = continuous_newsvendor(&fit, anchor, alpha, s);
            *o += order[a..b].iter().map(|&i| newsvendor_cost(s, x, train[i])).sum::<f64>();
        }
    }
    out
}

/// Oracle criterion: full-history mean cost of the pooled decision.
fn continuous_truth(store: &Store, train: &[f64], anchor: &dyn Cdf, alphas: &[f64], s: f64) -> Vec<f64> {
    let sorted = sorted(train);
    let hist = &store.series.values;
    alphas
        .iter()
        .map(|&a| {
            let x = continuous_newsvendor(&sorted, anchor, a, s);
            hist.iter().map(|&v| newsvendor_cost(s, x, v)).sum::<f64>() / hist.len() as f64
        })
        .collect()
}

fn pick(alphas: &[f64], curves: &[Vec<f64>]) -> (f64, usize) {
    let mut trace = Vec::with_capacity(alphas.len() * curves.len());
    for (j, &alpha) in alphas.iter().enumerate() {
        for (c, curve) in curves.iter().enumerate() {
            trace.push(TracePoint { alpha, candidate: c, value: curve[j] });
        }
    }
    let best = trace[argmin_trace(&trace)];
    (best.alpha, best.candidate)
}

fn js_alpha(splits: &[Split], anchors: &[DynCdf]) -> f64 {
    let (mut var_sum, mut dist_sum, mut n_sum, mut used) = (0.0, 0.0, 0.0, 0usize);
    for (sp, a) in splits.iter().zip(anchors) {
        let n = sp.train.len();
        if n < 2 {
            continue;
        }
        let nf = n as f64;
        let mean = sp.train.iter().sum::<f64>() / nf;
        var_sum += sp.train.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        dist_sum += (a.mean() - mean) * (a.mean() - mean);
        n_sum += nf;
        used += 1;
    }
    if used == 0 {
        log::warn!("no store has two training points; using alpha = 0");
        return 0.0;
    }
    let kf = used as f64;
    let den = dist_sum / kf - var_sum / (n_sum / kf * kf);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        (var_sum / kf) / den
    }
}

fn continuous_policy(
    stores: &[Store],
    splits: &[Split],
    s: f64,
    policy: Policy,
    ctx: &PolicyContext,
) -> Result<(Option<f64>, Vec<f64>)> {
    let n = stores.len();
    let alphas = ctx.grid.values();
    let anchors_for = |kind: AnchorKind| -> Vec<Vec<DynCdf>> {
        match kind {
            AnchorKind::GrandMean => vec![grand_mean_cdfs(stores, splits)],
            AnchorKind::Fixed => vec![uniform_cdfs(stores)],
            AnchorKind::Beta => beta_cdfs(stores, ctx),
        }
    };
    let solve_all = |anchors: &[DynCdf], alpha: f64| -> Vec<f64> {
        par::map_range(n, |j| continuous_newsvendor(&sorted(&splits[j].train), anchors[j].as_ref(), alpha, s))
    };
    let select = |candidates: Vec<Vec<DynCdf>>, per_store: &(dyn Fn(usize, &dyn Cdf) -> Vec<f64> + Sync)| {
        let curves: Vec<Vec<f64>> = candidates
            .iter()
            .map(|c| {
                let parts = par::map_range(n, |j| per_store(j, c[j].as_ref()));
                crate::pooling::sum_curves(&parts, alphas.len())
            })
            .collect();
        let (alpha, c) = pick(alphas, &curves);
        (Some(alpha), solve_all(&candidates[c], alpha))
    };
    Ok(match policy {
        Policy::Saa => {
            let gm = grand_mean_cdfs(stores, splits);
            (Some(0.0), solve_all(&gm, 0.0))
        }
        Policy::Ks => {
            let gm = grand_mean_cdfs(stores, splits);
            let x = par::map_range(n, |j| -> Result<f64> {
                let train = &splits[j].train;
                let bounds = (stores[j].lo, stores[j].hi);
                if train.is_empty() {
                    return Ok(gm[j].quantile(s));
                }
                let stream_id = ((ctx.rep as u64) << 32) | j as u64;
                let rho = ks_select_rho(train, s, bounds, &ctx.ks, stream_id)?;
                ks_solve(train, rho, s, bounds)
            });
            (None, x.into_iter().collect::<Result<Vec<_>>>()?)
        }
        Policy::Js(kind) => {
            let anchors = anchors_for(kind).pop().expect("one candidate");
            let alpha = js_alpha(splits, &anchors);
            (Some(alpha), solve_all(&anchors, alpha))
        }
        Policy::Ssaa(kind) => select(anchors_for(kind), &|j, a| continuous_loo(&splits[j].train, a, alphas, s)),
        Policy::SsaaKFold(kind, folds) => {
            let seed = derive_seed(ctx.seed, &[ctx.rep as u64], "kfold");
            select(anchors_for(kind), &|j, a| continuous_kfold(&splits[j].train, a, alphas, s, folds, seed, j))
        }
        Policy::Oracle(kind) => {
            select(anchors_for(kind), &|j, a| continuous_truth(&stores[j], &splits[j].train, a, alphas, s))
        }
    })
}
