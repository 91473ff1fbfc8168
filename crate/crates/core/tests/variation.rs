use std::f64::consts::PI;
use std::time::Instant;

use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::isoperimetry::Region;
use lglab_core::metric::{Base, ConformalMetric};
use lglab_core::surface::Geometry;
use lglab_core::variation::*;

fn round() -> ConformalMetric {
    ConformalMetric::round(Base::Sphere, SphereGrid::standard(), 1.0)
}

fn setup(m: &ConformalMetric, theta: f64) -> (Region, DescentPerturbation, NormalField) {
    let r = Region::cap(&Geometry::new(m), &spherical_to_cartesian(0.7, 0.4), theta).unwrap();
    let x = r.boundary.as_ref().unwrap().vertices()[37];
    let d = build_descent_perturbation(m, &r, &x, 0.2).unwrap();
    let nf = NormalField::new(m, &r, &d.support_center, 0.2).unwrap();
    (r, d, nf)
}

#[test]
fn correction_is_quadratic_and_slope_meets_bound() {
    let m = round();
    for (theta, v) in [(PI / 2.0, 0.5), (PI / 3.0, 0.25)] {
        let t0 = Instant::now();
        let (r, d, nf) = setup(&m, theta);
        let corr = volume_correction(&m, &r, &d.u, &nf, v, &DEFAULT_T_SAMPLES).unwrap();
        let rep = descent_slope(&m, &r, &d.u, &nf, v).unwrap();
        eprintln!(
            "v {v}: exponent {:?} slope {} bound {} ({:?}) {:?}",
            corr.exponent,
            rep.measured_slope,
            rep.bound,
            t0.elapsed(),
            corr.samples
        );
        assert!(corr.exponent.unwrap() >= 1.9);
        assert!(rep.meets_bound);
        assert!(rep.measured_slope <= -0.0716);
        assert_eq!(
            volume_correction(&m, &r, &d.u, &nf, v, &[0.0]).unwrap().samples[0].1,
            0.0
        );

        let control = d.with_region_mass(&m, &r, 0.1).unwrap();
        let corr = volume_correction(&m, &r, &control, &nf, v, &DEFAULT_T_SAMPLES).unwrap();
        eprintln!("control exponent {:?} {:?}", corr.exponent, corr.samples);
        assert!(corr.exponent.unwrap() < 1.5);
    }
}

#[test]
fn null_perturbation_reports_no_descent() {
    let m = round();
    let (r, _, nf) = setup(&m, PI / 2.0);
    let zero = vec![0.0; m.grid().len()];
    let rep = descent_slope(&m, &r, &zero, &nf, 0.5).unwrap();
    assert_eq!(rep.measured_slope, 0.0);
    assert!(!rep.meets_bound);
}
