use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use invdens::harness::{run_experiment, ExperimentConfig};

fn config(workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(
        r#"{
            "model": {"id": "ou", "theta": [1, 1, 1], "sigma": [1.4142135623730951, 1.4142135623730951, 1.4142135623730951]},
            "smoothness": {"beta": [2, 2, 2]},
            "kernel_order": 2,
            "bandwidth": {"rule": "continuous"},
            "sweep": [{"n": 4000, "delta": 0.05}],
            "replications": 64,
            "seed": 7
        }"#,
    )
    .unwrap();
    cfg.workers = Some(workers);
    cfg
}

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    let label = if cfg!(feature = "parallel") { "rayon" } else { "sequential-build" };
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    for workers in [1, cores.max(2)] {
        let cfg = config(workers);
        group.bench_with_input(BenchmarkId::new(label, workers), &cfg, |b, cfg| b.iter(|| run_experiment(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
