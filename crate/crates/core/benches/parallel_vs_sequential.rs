//! Nested CV and the simulation benchmark on one worker versus the full
//! rayon pool. Build with `--no-default-features` to time the purely
//! sequential code path instead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pauc_push::par;
use pauc_push::selection::{select_weight_and_lambda, LambdaGrid};
use pauc_push::simulation::{generate, run_benchmark};
use pauc_push::{PaucSpec, SearchSpec, SimDesign};

fn design() -> SimDesign {
    SimDesign {
        n_diseased: 40,
        n_non_diseased: 40,
        n_noise: 30,
        replicates: 2,
        ..Default::default()
    }
}

fn search() -> SearchSpec {
    SearchSpec {
        weight_grid: vec![1.0, 4.0, 8.0, 16.0],
        lambda_grid: LambdaGrid::Auto {
            n_lambda: 20,
            min_ratio: 0.01,
        },
        ..Default::default()
    }
}

fn modes() -> Vec<(&'static str, Option<usize>)> {
    vec![("one-thread", Some(1)), ("pool", None)]
}

fn nested_cv(c: &mut Criterion) {
    let (train, _) = generate(&design(), 1).unwrap();
    let spec = search();
    let mut g = c.benchmark_group("nested_cv");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| {
                par::with_threads(t, || {
                    select_weight_and_lambda(black_box(&train), &spec).unwrap()
                })
            })
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let (d, s) = (design(), search());
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || run_benchmark(black_box(&d), &s).unwrap()))
        });
    }
    g.finish();
}

fn pauc(c: &mut Criterion) {
    let (train, _) = generate(&design(), 2).unwrap();
    let scores = train.column(0).to_vec();
    let spec = PaucSpec::half_credit(0.2).unwrap();
    c.bench_function("pauc_estimate_80", |b| {
        b.iter(|| pauc_push::roc::pauc_estimate(black_box(&scores), train.labels(), &spec).unwrap())
    });
}

criterion_group!(benches, nested_cv, simulation, pauc);
criterion_main!(benches);
