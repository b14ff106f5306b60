use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tailequiv::copulas::{column_ranks, owens_t, shape_from_delta, SkewT};
use tailequiv::experiments::Grid;
use tailequiv::rng::substream;
use tailequiv::{draisma_variance, finite_test, xi_limit_hat, CopulaModel, DraismaForm, EmpiricalTails, LimitOptions, PairedSample, XiConfig};

fn fgm_pair(n: usize) -> PairedSample {
    PairedSample::independent(&CopulaModel::Fgm { delta: 0.0 }, &CopulaModel::Fgm { delta: 1.0 }, n, &mut substream(1, 0)).unwrap()
}

fn finite_sweep(c: &mut Criterion) {
    let cfg = XiConfig::clamps(0.5, 2, 1.5).unwrap();
    let sample = fgm_pair(40_000);
    let grid = Grid::linspace(0.0025, 0.25, 50).values();
    c.bench_function("finite/tails_n40000", |b| b.iter(|| EmpiricalTails::from_sample(black_box(&sample))));
    let tails = EmpiricalTails::from_sample(&sample);
    c.bench_function("finite/sweep_50_thresholds", |b| {
        b.iter(|| grid.iter().map(|&u| finite_test(&tails, u, &cfg, 0.05).unwrap().estimate).sum::<f64>())
    });
}

fn hill(c: &mut Criterion) {
    let cfg = XiConfig::clamps(0.5, 2, 1.5).unwrap();
    let sample = fgm_pair(40_000);
    let ranks = column_ranks(sample.u1.view());
    let mut group = c.benchmark_group("hill");
    for k in [400usize, 4000] {
        group.bench_with_input(BenchmarkId::new("draisma_variance", k), &k, |b, &k| b.iter(|| draisma_variance(&ranks, k, DraismaForm::Squared).unwrap()));
    }
    group.bench_function("limit_estimate_k1000", |b| {
        b.iter(|| xi_limit_hat(sample.u1.view(), sample.u2.view(), 1000, 0.025, &cfg, &LimitOptions::default()).unwrap())
    });
    group.finish();
}

fn marginals(c: &mut Criterion) {
    let dist = SkewT::new(shape_from_delta(0.6), 5.0).unwrap();
    let xs: Vec<f64> = (0..1000).map(|i| -8.0 + 16.0 * i as f64 / 999.0).collect();
    c.bench_function("skew_t/cdf_many_1000", |b| b.iter(|| dist.cdf_many(black_box(&xs)).unwrap()));
    c.bench_function("owens_t/grid_100", |b| {
        b.iter(|| (0..100).map(|i| owens_t(black_box(-4.0 + 0.08 * i as f64), 1.7)).sum::<f64>())
    });
    let model = CopulaModel::SkewT { rho: 0.5, delta1: 0.6, delta2: 0.6, nu: 5.0 };
    c.bench_function("skew_t/sample_10000", |b| b.iter(|| model.sample_with(10_000, &mut substream(2, 0), Default::default()).unwrap()));
}

criterion_group!(benches, finite_sweep, hill, marginals);
criterion_main!(benches);
