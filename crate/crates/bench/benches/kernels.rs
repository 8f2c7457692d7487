use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use willmore_bench::{perturbed_sphere, sphere_grid, unit_curvature};
use willmore_core::ambient::AmbientMetric;
use willmore_core::conservation::{build_potentials, PotentialOptions};
use willmore_core::geometry::{evaluate_bundle, DerivativeSource};
use willmore_core::minimize::{energy_area, gradient};
use willmore_core::surfaces::willmore_torus;

fn bundle(c: &mut Criterion) {
    let torus = willmore_torus();
    let mut group = c.benchmark_group("evaluate_bundle");
    for n in [65, 129] {
        let chart = torus.default_chart(n).unwrap();
        for src in [DerivativeSource::Analytic, DerivativeSource::FiniteDifference] {
            group.bench_with_input(BenchmarkId::new(format!("{src:?}"), n), &chart, |b, chart| {
                b.iter(|| evaluate_bundle(&torus, black_box(chart), src).unwrap())
            });
        }
    }
    group.finish();
}

fn potentials(c: &mut Criterion) {
    let torus = willmore_torus();
    let chart = torus.patch_chart(129).unwrap();
    let b = evaluate_bundle(&torus, &chart, DerivativeSource::Analytic).unwrap();
    let opts = PotentialOptions::default();
    c.bench_function("build_potentials/129", |bench| {
        bench.iter(|| build_potentials(black_box(&b), &opts).unwrap())
    });
}

fn radial(c: &mut Criterion) {
    let shape = perturbed_sphere(4, 1.0);
    let small = perturbed_sphere(4, 0.1);
    let grid = sphere_grid(4);
    let mut group = c.benchmark_group("radial");
    for (name, shape, g) in [("flat", &shape, AmbientMetric::Euclidean), ("curved", &small, unit_curvature())] {
        group.bench_function(format!("energy_area/{name}"), |b| {
            b.iter(|| energy_area(black_box(shape), &grid, &g).unwrap())
        });
    }
    group.sample_size(10);
    group.bench_function("gradient/flat", |b| {
        b.iter(|| gradient(black_box(&shape), &grid, &AmbientMetric::Euclidean, 1e-5).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bundle, potentials, radial);
criterion_main!(benches);
