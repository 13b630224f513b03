//! Benchmarks for the hot paths of the optimizer: distance-row computation,
//! estimator construction, density evaluation, and a full suggestion step.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use metric_tpe::{
    build_estimator, split_observations, AskTell, ParamValue, ParamVector, TpeConfig,
};
use metric_tpe_bench::{embedding_problem, history_for, optimizer_with_history};

fn bench_metric_rows(c: &mut Criterion) {
    let mut group = c.benchmark_group("metric_row");
    for categories in [100usize, 1000] {
        let problem = embedding_problem(categories, 16);
        let metric = match problem.space().dims()[0] {
            metric_tpe::Dimension::MetricCategorical { ref metric } => metric.clone(),
            _ => unreachable!("embedding problems use a metric dimension"),
        };
        group.bench_with_input(
            BenchmarkId::from_parameter(categories),
            &categories,
            |b, _| b.iter(|| metric.row(black_box(0)).unwrap()),
        );
    }
    group.finish();
}

fn bench_max_distance(c: &mut Criterion) {
    let problem = embedding_problem(1000, 16);
    let metric = match problem.space().dims()[0] {
        metric_tpe::Dimension::MetricCategorical { ref metric } => metric.clone(),
        _ => unreachable!(),
    };
    let bases: Vec<usize> = (0..100).map(|i| i * 7 % 1000).collect();
    c.bench_function("max_distance_100_bases", |b| {
        b.iter(|| metric.approx_max_distance(black_box(&bases)).unwrap())
    });
}

fn bench_build_estimator(c: &mut Criterion) {
    let problem = embedding_problem(1000, 16);
    let history = history_for(&problem, 100);
    let split = split_observations(&history);
    let config = TpeConfig::default();
    c.bench_function("build_estimator_good_side", |b| {
        b.iter(|| build_estimator(black_box(&split.good), problem.space(), &config))
    });
}

fn bench_log_pdf(c: &mut Criterion) {
    let problem = embedding_problem(1000, 16);
    let history = history_for(&problem, 100);
    let estimator = build_estimator(&history, problem.space(), &TpeConfig::default());
    let x = ParamVector::new(vec![ParamValue::Index(123)]);
    c.bench_function("log_pdf", |b| {
        b.iter(|| estimator.log_pdf(black_box(&x)).unwrap())
    });
}

fn bench_suggest(c: &mut Criterion) {
    let problem = embedding_problem(1000, 16);
    c.bench_function("suggest_at_100_observations", |b| {
        b.iter_batched(
            || optimizer_with_history(&problem, 100),
            |mut optimizer| optimizer.ask().unwrap(),
            criterion::BatchSize::LargeInput,
        )
    });
}

criterion_group!(
    benches,
    bench_metric_rows,
    bench_max_distance,
    bench_build_estimator,
    bench_log_pdf,
    bench_suggest
);
criterion_main!(benches);
