use std::time::Instant;

use lglab_core::curvature::gauss_curvature;
use lglab_core::fields::{bump, bump_with, BumpProfile};
use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::metric::{Base, ConformalMetric};
use lglab_core::rigidity::*;

fn slack_bump() -> ConformalMetric {
    let g = SphereGrid::standard();
    let b = bump(&g, &spherical_to_cartesian(1.2, 0.5), 1.0, 0.002);
    let u = b.iter().map(|x| x - 0.04).collect();
    ConformalMetric::new(Base::Sphere, g, u, 1.0).unwrap()
}

#[test]
fn slack_bump_is_not_critical() {
    let m = slack_bump();
    let k = gauss_curvature(&m).unwrap();
    eprintln!("K range [{}, {}]", k.min_value, k.max_value);
    let t = Instant::now();
    let v = rigidity_probe(&m, &[0.3], 4).unwrap();
    eprintln!("{:?} {:?}", v.conclusion, t.elapsed());
    for p in &v.probed_points {
        eprintln!("{p:?}");
    }
    let w = v.descent_witness.as_ref().unwrap();
    eprintln!("t* {} slope {} cert {:?}", w.t_star, w.slope, w.certificate.min_slack);
    assert_eq!(v.conclusion, Conclusion::NotCritical);
}

#[test]
fn witness_revalidates() {
    let m = slack_bump();
    let v = rigidity_probe(&m, &[0.3], 4).unwrap();
    let w = v.descent_witness.unwrap();
    let (cert, slope) = revalidate(&m, &w).unwrap();
    assert!(cert.is_admissible());
    assert!(slope < 0.0);
    assert_eq!(cert, w.certificate);
}

#[test]
fn round_spaces_have_no_admissible_descent() {
    for base in [Base::Sphere, Base::ProjectivePlane] {
        let m = ConformalMetric::round(base, SphereGrid::standard(), 1.0);
        let t = Instant::now();
        let v = rigidity_probe(&m, &[0.25, 0.5], 8).unwrap();
        eprintln!("{base:?}: {:?} {:?}", v.conclusion, t.elapsed());
        assert_eq!(v.conclusion, Conclusion::NoAdmissibleDescentFound);
        assert!(!v.descent_found);
        assert_eq!(v.probed_points.len(), 16);
        assert!(v.probed_points.iter().all(|p| p.slack.abs() < 1e-5));
    }
}

#[test]
fn probe_is_scale_covariant() {
    let m = slack_bump();
    let lambda: f64 = 1.3;
    let scaled = m.shifted(lambda.ln()).with_k(m.k() / (lambda * lambda));
    let a = rigidity_probe(&m, &[0.3], 2).unwrap();
    let b = rigidity_probe(&scaled, &[0.3], 2).unwrap();
    assert_eq!(a.conclusion, b.conclusion);
}

#[test]
fn descent_perturbation_breaks_round_bound() {
    use lglab_core::isoperimetry::Region;
    use lglab_core::surface::Geometry;
    use lglab_core::variation::build_descent_perturbation;
    let m = ConformalMetric::round(Base::Sphere, SphereGrid::standard(), 1.0);
    let r = Region::cap(&Geometry::new(&m), &spherical_to_cartesian(0.7, 0.4), 1.0).unwrap();
    let x = r.boundary.as_ref().unwrap().vertices()[0];
    let d = build_descent_perturbation(&m, &r, &x, 0.2).unwrap();
    let c = certify_admissibility(&m, &d.u, &[1e-2]).unwrap();
    assert_eq!(c.verdict, Admissibility::Violated);
    assert!(c.min_slack < 0.0);
}

#[test]
fn strict_slack_admits_small_parameters() {
    let m = slack_bump();
    let g = m.grid();
    let u = bump(g, &spherical_to_cartesian(1.2, 0.5), 0.5, 1.0);
    let c = certify_admissibility(&m, &u, &[1e-3, -1e-3]).unwrap();
    assert!(c.is_admissible());
    let zero = vec![0.0; g.len()];
    let own = gauss_curvature(&m).unwrap().min_value - 1.0;
    for t in [0.0, 0.05, -0.1] {
        let c = certify_admissibility(&m, &zero, &[t]).unwrap();
        assert!((c.min_slack - own).abs() < 1e-12);
    }
}

#[test]
fn scaling_descent_for_nonpositive_bound() {
    let round = ConformalMetric::round(Base::Sphere, SphereGrid::standard(), 1.0);
    for (k, v) in [(0.0, 0.5), (-1.0, 0.5), (0.0, 0.25)] {
        let m = round.with_k(k);
        let s = scaling_descent_nonpositive_k(&m, v).unwrap();
        eprintln!("K {k} v {v}: dL/dt {} L {}", s.derivative, s.value);
        assert!((s.derivative + s.value).abs() < 1e-4);
        assert_eq!(s.value, s.value_at_zero);
        assert!(s.certificate.is_admissible());
        if v == 0.5 {
            assert!((s.derivative + 0.5).abs() < 1e-4);
        }
    }
}

#[test]
fn small_caps_concentrate_at_the_curvature_maximum() {
    let g = SphereGrid::standard();
    let p = spherical_to_cartesian(1.1, 0.7);
    let m = ConformalMetric::new(
        Base::Sphere,
        g,
        bump_with(&g, &p, 1.0, 0.05, BumpProfile::Polynomial),
        1.0,
    )
    .unwrap();
    let t = Instant::now();
    let c = small_volume_concentration(&m, &[0.2, 0.1, 0.05]).unwrap();
    let d: Vec<f64> = c.entries.iter().map(|e| e.distance).collect();
    eprintln!("{d:?} {:?}", t.elapsed());
    assert!(lglab_core::grid::geodesic_distance(&c.argmax, &p) < 0.01);
    assert!(c.non_increasing);
    assert!(d[2] < 0.5);
}

/// Mollifier bump: the curvature maximum lies on a ring around the center,
/// and at v = 0.2 every cap containing the support has the same area, so
/// only the small-volume end of the experiment is well posed.
#[test]
fn mollifier_bump_small_cap_sits_on_the_bump() {
    use lglab_core::isoperimetry::{cap_sweep, RegionKind};
    let g = SphereGrid::standard();
    let p = spherical_to_cartesian(1.1, 0.7);
    let m = ConformalMetric::new(Base::Sphere, g, bump(&g, &p, 0.5, 0.05), 1.0).unwrap();
    let c = small_volume_concentration(&m, &[0.05]).unwrap();
    assert!(c.entries[0].distance < 0.5);
    let s = cap_sweep(&m, &[0.05]).unwrap();
    let RegionKind::Cap { center, .. } = &s.samples[0].witness.kind else {
        panic!("cap witness expected")
    };
    assert!(lglab_core::grid::geodesic_distance(center, &p) < 0.5);
}
