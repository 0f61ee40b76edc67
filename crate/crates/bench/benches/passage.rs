use criterion::{criterion_group, criterion_main, Criterion};
use symchain::passage::{build_passage_problem, fpt_density_symmetric, fpt_density_volterra};
use symchain::transient::transition_matrices;
use symchain::{SymmetryCertificate, TimeGrid};
use symchain_bench::bd_window;

fn bench_fpt(c: &mut Criterion) {
    let q = bd_window(0.3, 40);
    let prob = build_passage_problem(&q, Some(SymmetryCertificate::uniform(q.space()).unwrap())).unwrap();
    let p = transition_matrices(&q, TimeGrid::new(5.0, 500).unwrap(), 1e-12).unwrap();
    let mut group = c.benchmark_group("fpt_density");
    group.bench_function("volterra", |b| b.iter(|| fpt_density_volterra(&prob, &p, 3)));
    group.bench_function("currents", |b| b.iter(|| fpt_density_symmetric(&prob, &p, 3)));
    group.finish();
}

criterion_group!(benches, bench_fpt);
criterion_main!(benches);
