use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use symchain::simulate::{estimate_fpt_histogram, simulate_paths};
use symchain::{SimulationConfig, TimeGrid};
use symchain_bench::bd_window;

fn bench_paths(c: &mut Criterion) {
    let q = bd_window(0.2, 40);
    let mut group = c.benchmark_group("simulate_paths");
    group.sample_size(10);
    for n_paths in [1_000usize, 10_000] {
        let config = SimulationConfig::new(n_paths, 2.0, 7, 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_paths), &config, |b, config| {
            b.iter(|| simulate_paths(&q, config));
        });
    }
    group.finish();
}

fn bench_histogram(c: &mut Criterion) {
    let q = bd_window(0.2, 40);
    let paths = simulate_paths(&q, &SimulationConfig::new(10_000, 2.0, 7, 3).unwrap()).unwrap();
    let bins = TimeGrid::new(2.0, 40).unwrap();
    c.bench_function("estimate_fpt_histogram 10k", |b| b.iter(|| estimate_fpt_histogram(&paths, 0, bins)));
}

criterion_group!(benches, bench_paths, bench_histogram);
criterion_main!(benches);
