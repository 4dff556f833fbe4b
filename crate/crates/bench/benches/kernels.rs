use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fibermon_bench::{chain, launch_field, received, signal};
use fibermon_core::correlation::{profiles, uniform_z_grid, Convention, ProfileKind};
use fibermon_core::ssfm::{dispersion_step, nonlinear_step, propagate, SsfmConfig};

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for log2 in [12, 15] {
        let w = launch_field(&signal(1 << log2, 2));
        g.bench_with_input(BenchmarkId::new("dispersion", log2), &w, |b, w| {
            b.iter(|| dispersion_step(black_box(w), -21.68))
        });
        g.bench_with_input(BenchmarkId::new("kerr", log2), &w, |b, w| {
            b.iter(|| nonlinear_step(black_box(w), 1.3, 1.9, true).unwrap())
        });
    }
    g.finish();
}

fn propagation(c: &mut Criterion) {
    let s = signal(1 << 12, 2);
    let w = launch_field(&s);
    let (_, plan) = chain(1);
    let cfg = SsfmConfig::with_step(2.0);
    c.bench_function("propagate/80km", |b| b.iter(|| propagate(black_box(&w), &plan, &cfg, 1).unwrap()));
}

fn estimation(c: &mut Criterion) {
    let s = signal(1 << 12, 2);
    let (spec, plan) = chain(2);
    let rx = vec![received(&s, &spec, &plan)];
    let z = uniform_z_grid(160.0, 10.0).unwrap();
    c.bench_function("profiles/160km_17pts", |b| {
        b.iter(|| profiles(black_box(&rx), &[ProfileKind::Ppe, ProfileKind::Nppe], &plan, &z, Convention::Real).unwrap())
    });
}

criterion_group!(benches, kernels, propagation, estimation);
criterion_main!(benches);
