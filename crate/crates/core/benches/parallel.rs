use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use perflaw::law::{Architecture, DenseArch, RegressionWeights, TrainingSpec};
use perflaw::planner::{
    search_architectures_with, sweep_with, GridRange, SearchConstraints, SweepSpec, SweepVariable,
};
use perflaw::zoo::{builtin_zoo, evaluate_zoo_with};
use perflaw::Execution;

const W: RegressionWeights = RegressionWeights::PUBLISHED;
const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn zoo(c: &mut Criterion) {
    // Repeat the table so the batch is large enough to split across threads.
    let records: Vec<_> = builtin_zoo().into_iter().cycle().take(55 * 200).collect();
    let mut group = c.benchmark_group("zoo_eval");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &records, |b, r| {
            b.iter(|| evaluate_zoo_with(black_box(r), &W, exec).unwrap())
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let constraints = SearchConstraints {
        max_params: 80.0,
        token_budget: 15.0,
        gamma: 1.0,
        layers: GridRange::new(16, 128, 4),
        hidden: GridRange::dims(2048, 12288),
        ffn: GridRange::new(4096, 32768, 512),
        vocab_size: None,
        moe: None,
    };
    let mut group = c.benchmark_group("search_grid");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &constraints, |b, c| {
            b.iter(|| search_architectures_with(black_box(c), &W, 10, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        variable: SweepVariable::Gamma,
        min: 0.0,
        max: 3.0,
        steps: 100_000,
        base: Architecture::Dense(DenseArch::new(80, 8192, 28672, 70.0).unwrap()),
        train: TrainingSpec::new(15.0).unwrap(),
    };
    let mut group = c.benchmark_group("sweep");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, s| {
            b.iter(|| sweep_with(black_box(s), &W, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, zoo, search, sweep);
criterion_main!(benches);
