use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pooled_saa::experiments::{
    DataModel, GridSpec, MixtureComponent, Policy, PolicySettings, SimSpec, SimWorld, TruthModel,
};
use pooled_saa::par::{with_schedule, Schedule};
use pooled_saa::pooling::{grand_mean, loo_curve, AlphaGrid, AnchorSet};
use pooled_saa::problem::CostModel;

fn spec(k: usize) -> SimSpec {
    SimSpec {
        k,
        d: 10,
        support: None,
        truth_model: TruthModel::Mixture {
            components: vec![
                MixtureComponent { weight: 0.5, model: TruthModel::DirichletUniform },
                MixtureComponent { weight: 0.5, model: TruthModel::Dirichlet { concentration: vec![3.0; 10] } },
            ],
        },
        data_model: DataModel::FixedN { n: 20 },
        cost: CostModel::Newsvendor { s: 0.9 },
        policies: vec![Policy::Saa],
        alpha_grid: GridSpec::default(),
        reps: 1,
        seed: 1,
        settings: PolicySettings::default(),
    }
}

fn loo(c: &mut Criterion) {
    let grid = AlphaGrid::default();
    let mut group = c.benchmark_group("loo_curve");
    group.sample_size(10);
    for k in [1_000, 10_000] {
        let ds = SimWorld::new(&spec(k)).unwrap().instance(0).unwrap();
        let anchors = AnchorSet::shared(grand_mean(&ds).unwrap(), ds.len());
        for (name, schedule) in [("serial", Schedule::Serial), ("parallel", Schedule::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, _| {
                b.iter(|| with_schedule(schedule, || loo_curve(&ds, &anchors, grid.values()).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, loo);
criterion_main!(benches);
