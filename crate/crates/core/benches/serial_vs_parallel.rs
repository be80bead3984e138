use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lie_plateau::moments::{build_layer_moment, lambda_max_with, LambdaOptions};
use lie_plateau::setups::{setup_instance, Setup, SetupOptions};
use lie_plateau::simulate::{estimate_variance_mc, CircuitSpec, McOptions};
use lie_plateau::Execution;

const EXECUTORS: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for n in [4, 8] {
        let inst = setup_instance(Setup::One, n, 0, &SetupOptions::default()).unwrap();
        let spec = CircuitSpec::new(inst.generators.clone(), 2 * n).unwrap();
        for (name, exec) in EXECUTORS {
            let opts = McOptions::new(400, 1).with_exec(exec);
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| estimate_variance_mc(&inst.state, &inst.observable, &spec, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn moment_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_apply");
    for n in [12, 18] {
        let op = build_layer_moment(n).unwrap();
        let v: Vec<f64> = (0..1usize << n).map(|i| (i % 7) as f64 - 3.0).collect();
        for (name, exec) in EXECUTORS {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| op.apply(&v, exec).unwrap()));
        }
    }
    group.finish();
}

fn lambda(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda_max");
    group.sample_size(10);
    for (name, exec) in EXECUTORS {
        let opts = LambdaOptions { exec, ..LambdaOptions::default() };
        group.bench_function(BenchmarkId::new(name, 12), |b| b.iter(|| lambda_max_with(12, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, moment_apply, lambda);
criterion_main!(benches);
