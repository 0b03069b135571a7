use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vpurify_bench::{feedback, multiparam, zeeman};
use vpurify_core::harness::run_experiment;
use vpurify_core::Method;

fn exact_evaluation(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for method in [Method::None, Method::Vsp, Method::Vcp, Method::Pvcp] {
        let spec = zeeman(20, method);
        g.bench_function(format!("zeeman-{method}"), |b| b.iter(|| run_experiment(black_box(&spec)).unwrap()));
    }
    for layers in [1, 2, 3] {
        let spec = multiparam(100, Method::Pvcp, layers, None);
        g.bench_function(format!("multiparam-pvcp-L{layers}"), |b| {
            b.iter(|| run_experiment(black_box(&spec)).unwrap())
        });
    }
    g.finish();
}

fn shot_sampling(c: &mut Criterion) {
    let spec = multiparam(100, Method::Pvcp, 1, Some(1_000_000));
    c.bench_function("shots/multiparam-pvcp-1e6", |b| b.iter(|| run_experiment(black_box(&spec)).unwrap()));
}

fn feedback_loop(c: &mut Criterion) {
    let mut g = c.benchmark_group("feedback");
    g.sample_size(10);
    for method in [Method::None, Method::Pvcp] {
        let spec = feedback(method, 3);
        g.bench_function(format!("{method}-3-iterations"), |b| b.iter(|| run_experiment(black_box(&spec)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, exact_evaluation, shot_sampling, feedback_loop);
criterion_main!(benches);
