use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use soisim::exec::Execution;
use soisim::harness::{dynkin_check_with, run_trials_with, DynkinConfig, ExperimentConfig, Mode, PolicyChoice};
use soisim::ProcessModel;

fn config(model: ProcessModel) -> ExperimentConfig {
    ExperimentConfig {
        model,
        policy: PolicyChoice::OptimalForRate,
        rate_target: 1.0,
        horizon: 20.0,
        dt: 1e-3,
        trials: 16,
        master_seed: 1,
        mode: Mode::Estimation,
    }
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_trials");
    group.sample_size(10);
    let models = [
        ("wiener", ProcessModel::standard_wiener()),
        ("ou", ProcessModel::ornstein_uhlenbeck(1.0, 0.0, 1.0).unwrap()),
    ];
    for (name, model) in models {
        let cfg = config(model);
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), name), &cfg, |b, cfg| {
                b.iter(|| run_trials_with(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn dynkin(c: &mut Criterion) {
    let mut group = c.benchmark_group("dynkin_check");
    group.sample_size(10);
    let cfg = DynkinConfig::new(ProcessModel::ornstein_uhlenbeck(1.0, 0.0, 1.0).unwrap(), 1.0, 200, 1e-3, 3);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| dynkin_check_with(&cfg, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, trials, dynkin);
criterion_main!(benches);
