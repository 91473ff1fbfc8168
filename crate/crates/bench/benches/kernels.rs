use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lglab_core::curvature::{gauss_curvature, laplace_beltrami};
use lglab_core::curve::Curve;
use lglab_core::fields::{bump, harmonic_field};
use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::isoperimetry::{cap_sweep, curve_flow_refine, Region};
use lglab_core::metric::{Base, ConformalMetric};
use lglab_core::surface::Geometry;

fn operators(c: &mut Criterion) {
    let g = SphereGrid::standard();
    let f = harmonic_field(&g, 3, 2, 1.0);
    c.bench_function("laplace_beltrami 256x512", |b| {
        b.iter(|| laplace_beltrami(black_box(&g), black_box(&f)).unwrap())
    });
    let m = ConformalMetric::new(
        Base::Sphere,
        g,
        bump(&g, &spherical_to_cartesian(1.0, 0.3), 0.6, 0.05),
        1.0,
    )
    .unwrap();
    c.bench_function("gauss_curvature 256x512", |b| {
        b.iter(|| gauss_curvature(black_box(&m)).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let m = ConformalMetric::round(Base::Sphere, SphereGrid::new(128, 256).unwrap(), 1.0);
    let mut group = c.benchmark_group("cap_sweep");
    group.sample_size(10);
    group.bench_function("one fraction 128x256", |b| {
        b.iter(|| cap_sweep(black_box(&m), &[0.3]).unwrap())
    });
    group.finish();
}

fn flow(c: &mut Criterion) {
    let m = ConformalMetric::round(Base::Sphere, SphereGrid::new(128, 256).unwrap(), 1.0);
    let geo = Geometry::new(&m);
    let n = 256;
    let wiggled: Vec<_> = (0..n)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            spherical_to_cartesian(1.4 + 0.05 * (3.0 * phi).sin(), phi)
        })
        .collect();
    let r = Region::polygon(&geo, Curve::new(wiggled).unwrap()).unwrap();
    let v = r.volume_fraction;
    let mut group = c.benchmark_group("flow");
    group.sample_size(10);
    group.bench_function("wiggled latitude 128x256", |b| {
        b.iter(|| curve_flow_refine(black_box(&m), black_box(&r), v).unwrap())
    });
    group.finish();
}

criterion_group!(benches, operators, sweep, flow);
criterion_main!(benches);
