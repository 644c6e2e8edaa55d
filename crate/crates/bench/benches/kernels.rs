use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmcontract_bench::{params, smooth_field};
use pmcontract_core::functionals::dissipation_integral;
use pmcontract_core::solver::{stable_dt, step};
use pmcontract_core::Forms;

fn solver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (d, cells) in [(1, 256), (1, 4096), (2, 64), (2, 256)] {
        let u = smooth_field(d, cells, 0.0);
        let p = params(0.5, d);
        let dt = stable_dt(&u, &p, 0.4).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{d}d"), cells), &u, |b, u| {
            b.iter(|| step(u, dt, &p).unwrap())
        });
    }
    group.finish();
}

fn positivity_scan(c: &mut Criterion) {
    let forms = Forms::from_values(0.5, 0.8, 2.5).unwrap();
    c.bench_function("q_positivity_scan/2000", |b| b.iter(|| forms.q_positivity_scan(1e-3, 1.0, 2000).unwrap()));
    c.bench_function("negative_witness/2000", |b| b.iter(|| forms.negative_witness(1e-3, 1.0, 2000).unwrap()));
}

fn dissipation(c: &mut Criterion) {
    let forms = Forms::from_values(0.5, 0.8, 2.5).unwrap();
    let mut group = c.benchmark_group("dissipation_integral");
    for (d, cells) in [(1, 1024), (2, 128)] {
        let u = smooth_field(d, cells, 0.0);
        let v = smooth_field(d, cells, 0.7);
        group.bench_function(BenchmarkId::new(format!("{d}d"), cells), |b| {
            b.iter(|| dissipation_integral(&v, &u, &forms, 1e-12).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solver_step, positivity_scan, dissipation);
criterion_main!(benches);
