use std::f64::consts::PI;
use std::time::Instant;

use lglab_core::curve::Curve;
use lglab_core::fields::bump;
use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::isoperimetry::*;
use lglab_core::metric::{Base, ConformalMetric};
use lglab_core::surface::Geometry;

fn round(base: Base) -> ConformalMetric {
    ConformalMetric::round(base, SphereGrid::standard(), 1.0)
}

fn sphere_profile(v: f64) -> f64 {
    (v * (1.0 - v)).sqrt()
}

fn projective_profile(v: f64) -> f64 {
    (v * (2.0 - v)).sqrt()
}

#[test]
fn round_sweep_matches_closed_forms() {
    let t = Instant::now();
    let s = cap_sweep(&round(Base::Sphere), &[0.1, 0.25, 0.5, 0.9]).unwrap();
    eprintln!("sphere sweep {:?}", t.elapsed());
    for p in &s.samples {
        assert!(
            (p.normalized - sphere_profile(p.v)).abs() < 1e-3,
            "{} {}",
            p.v,
            p.normalized
        );
        assert!((p.normalized - p.area / s.total_volume).abs() < 1e-12);
        assert!(p.witness.is_cap());
    }
    let q = cap_sweep(&round(Base::ProjectivePlane), &[0.25, 0.5]).unwrap();
    for p in &q.samples {
        assert!(
            (p.normalized - projective_profile(p.v)).abs() < 1e-3,
            "{} {}",
            p.v,
            p.normalized
        );
    }
}

#[test]
fn sweep_rejects_fractions_outside_unit_interval() {
    assert!(cap_sweep(&round(Base::Sphere), &[0.0]).is_err());
    assert!(cap_sweep(&round(Base::Sphere), &[1.2]).is_err());
}

#[test]
fn sweep_profile_is_symmetric_on_perturbed_sphere() {
    let g = SphereGrid::standard();
    let u = bump(&g, &spherical_to_cartesian(1.0, 0.3), 0.6, 0.1);
    let m = ConformalMetric::new(Base::Sphere, g, u, 1.0).unwrap();
    let s = cap_sweep(&m, &[0.2, 0.8]).unwrap();
    assert!((s.samples[0].area - s.samples[1].area).abs() < 1e-9);
}

#[test]
fn wiggled_latitude_flows_to_equator() {
    let m = round(Base::Sphere);
    let geo = Geometry::new(&m);
    let n = 512;
    let pts: Vec<_> = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            spherical_to_cartesian(PI / 2.0 + 0.01 * (3.0 * phi).cos(), phi)
        })
        .collect();
    let r = Region::polygon(&geo, Curve::new(pts).unwrap()).unwrap();
    let t = Instant::now();
    let out = refine_with(&geo, &r, 0.5, &FlowOptions::default()).unwrap();
    eprintln!("equator flow {:?} steps {}", t.elapsed(), out.steps);
    assert!(out.converged);
    assert!((out.area - 2.0 * PI).abs() < 1e-3, "{}", out.area);
    assert!((out.region.volume_fraction - 0.5).abs() < 1e-8);
    assert!(out.area <= out.input_area + 1e-9);
}

#[test]
fn exact_cap_is_a_fixed_point() {
    let m = round(Base::Sphere);
    let geo = Geometry::new(&m);
    let r = Region::cap(&geo, &spherical_to_cartesian(0.8, 1.1), PI / 3.0).unwrap();
    let out = curve_flow_refine(&m, &r, 0.25).unwrap();
    assert!(out.converged);
    assert_eq!(out.steps, 0);
    assert_eq!(out.region, r);
    assert_eq!(out.area, out.input_area);
}

#[test]
fn flow_refuses_distant_targets() {
    let m = round(Base::Sphere);
    let geo = Geometry::new(&m);
    let r = Region::cap(&geo, &spherical_to_cartesian(0.8, 1.1), PI / 3.0).unwrap();
    assert!(refine_with(&geo, &r, 0.3, &FlowOptions::default()).is_err());
}

#[test]
fn flow_improves_sweep_cap_near_a_bump() {
    let g = SphereGrid::standard();
    let p = spherical_to_cartesian(1.0, 0.3);
    let m = ConformalMetric::new(Base::Sphere, g, bump(&g, &p, 1.0, 0.05), 1.0).unwrap();
    let geo = Geometry::new(&m);
    let sweep = cap_sweep_with(&geo, &[0.1], CENTER_STRIDE).unwrap();
    let s = &sweep.samples[0];
    let t = Instant::now();
    let out = refine_with(&geo, &s.witness, 0.1, &FlowOptions::default()).unwrap();
    eprintln!(
        "bump flow {:?} steps {} converged {} dev {:.3e} gain {:.3e}",
        t.elapsed(),
        out.steps,
        out.converged,
        out.curvature_deviation,
        s.area - out.area
    );
    assert!(!out.self_intersection);
    assert!(out.area < s.area);
}

#[test]
fn lg_functional_closed_forms_and_scaling() {
    let m = round(Base::Sphere);
    assert!((lg_functional(&m, 0.5).unwrap() - 0.5).abs() < 1e-3);
    let q = round(Base::ProjectivePlane);
    assert!((lg_functional(&q, 0.25).unwrap() - projective_profile(0.25)).abs() < 1e-3);
    let base = lg_functional(&m, 0.3).unwrap();
    for lambda in [0.5f64, 2.0] {
        let scaled = lg_functional(&m.shifted(lambda.ln()), 0.3).unwrap();
        assert!((scaled - base / lambda).abs() < 1e-6);
    }
}

#[test]
fn comparison_on_round_spaces() {
    let m = round(Base::Sphere);
    let r = check_levy_gromov(&m, &[0.2, 0.5]).unwrap();
    eprintln!("{:?}", r.entries);
    assert!(r.holds);
    for e in &r.entries {
        assert!(e.margin.abs() < 1e-3);
    }
    let q = round(Base::ProjectivePlane);
    let r = check_levy_gromov(&q, &[0.5]).unwrap();
    assert!((r.entries[0].margin - (0.75f64.sqrt() - 0.5)).abs() < 1e-3);
}

#[test]
fn comparison_refuses_when_curvature_bound_fails() {
    let m = round(Base::Sphere).with_k(1.5);
    assert!(matches!(
        check_levy_gromov(&m, &[0.5]),
        Err(lglab_core::Error::Hypothesis(_))
    ));
}
