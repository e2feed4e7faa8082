use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rvlab::mc::{moment_oracle_with, run_clt, EstimatorSpec, ExperimentConfig, OracleKind};
use rvlab::sim::ModelSpec;

fn clt_config(workers: usize) -> ExperimentConfig {
    ExperimentConfig::new(
        ModelSpec::heston_leverage(-0.7),
        vec![EstimatorSpec::Bipower { r: 1.0, s: 1.0 }],
        vec![1000],
        100,
        1,
    )
    .with_workers(workers)
}

fn executors() -> Vec<(&'static str, usize)> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![("sequential", 1), ("parallel", threads.max(2))]
}

fn clt_replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("clt_heston_bipower_100_reps");
    group.sample_size(10);
    for (name, workers) in executors() {
        let config = clt_config(workers);
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, cfg| {
            b.iter(|| run_clt(cfg).unwrap())
        });
    }
    group.finish();
}

fn oracle_draws(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_omega3_1e6_draws");
    group.sample_size(10);
    for (name, workers) in executors() {
        group.bench_function(name, |b| {
            b.iter(|| moment_oracle_with(&OracleKind::Omega { terms: 3 }, 1_000_000, 5, Some(workers)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, clt_replications, oracle_draws);
criterion_main!(benches);
