//! Randomized invariants on coarse grids.

use std::f64::consts::TAU;

use proptest::prelude::*;

use lglab_core::curvature::gauss_curvature;
use lglab_core::curve::Curve;
use lglab_core::fields::{bump, harmonic_field};
use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::isoperimetry::{measure, Region};
use lglab_core::metric::{Base, ConformalMetric};
use lglab_core::quotient::lift_region;
use lglab_core::rigidity::certify_admissibility;
use lglab_core::surface::Geometry;

fn grid() -> SphereGrid {
    SphereGrid::new(64, 128).unwrap()
}

fn bumped(theta: f64, phi: f64, height: f64) -> ConformalMetric {
    let g = grid();
    let u = bump(&g, &spherical_to_cartesian(theta, phi), 0.8, height);
    ConformalMetric::new(Base::Sphere, g, u, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 16,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn curvature_scales_under_constant_shift(
        theta in 0.3f64..2.8, phi in 0.0f64..TAU, h in -0.1f64..0.1, c in -1.0f64..1.0,
    ) {
        let m = bumped(theta, phi, h);
        let k0 = gauss_curvature(&m).unwrap();
        let k1 = gauss_curvature(&m.shifted(c)).unwrap();
        // The pole rows amplify rounding in Δ(u + c) by ~1/(sin²θ dφ²).
        for (a, b) in k0.values.iter().zip(&k1.values) {
            prop_assert!((b - (-2.0 * c).exp() * a).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn fractions_are_scale_free_and_lengths_scale(
        theta in 0.3f64..2.8, phi in 0.0f64..TAU, h in -0.1f64..0.1,
        c in -1.0f64..1.0, aperture in 0.3f64..2.5,
    ) {
        let m = bumped(theta, phi, h);
        let center = spherical_to_cartesian(1.0, 2.0);
        let geo = Geometry::new(&m);
        let (f0, l0) = measure(&geo, &Region::cap(&geo, &center, aperture).unwrap()).unwrap();
        let scaled = m.shifted(c);
        let geo = Geometry::new(&scaled);
        let (f1, l1) = measure(&geo, &Region::cap(&geo, &center, aperture).unwrap()).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
        prop_assert!((l1 - c.exp() * l0).abs() < 1e-10 * l1.max(1.0));
    }

    #[test]
    fn complement_fractions_sum_to_one(
        theta in 0.3f64..2.8, phi in 0.0f64..TAU, h in -0.1f64..0.1,
        ct in 0.2f64..2.9, cp in 0.0f64..TAU, radius in 0.3f64..2.5,
    ) {
        let m = bumped(theta, phi, h);
        let geo = Geometry::new(&m);
        let c = Curve::geodesic_circle(&spherical_to_cartesian(ct, cp), radius, 200).unwrap();
        let r = Region::polygon(&geo, c).unwrap();
        let (f, l) = measure(&geo, &r).unwrap();
        let (fc, lc) = measure(&geo, &r.complemented()).unwrap();
        prop_assert!((f + fc - 1.0).abs() < 1e-12);
        prop_assert!((l - lc).abs() < 1e-12 * l);
    }

    #[test]
    fn round_certificates_do_not_depend_on_t(t in -0.1f64..0.1) {
        let m = ConformalMetric::round(Base::Sphere, grid(), 1.0);
        let zero = vec![0.0; m.grid().len()];
        let cert = certify_admissibility(&m, &zero, &[t]).unwrap();
        prop_assert!(cert.is_admissible());
        prop_assert!(cert.min_slack.abs() < 1e-9);
    }

    #[test]
    fn lifted_caps_halve_fraction_and_keep_area(
        ct in 0.2f64..2.9, cp in 0.0f64..TAU, aperture in 0.2f64..0.9, coeff in -0.05f64..0.05,
    ) {
        let g = grid();
        let m = ConformalMetric::new(Base::ProjectivePlane, g, harmonic_field(&g, 2, 1, coeff), 1.0).unwrap();
        let geo = Geometry::new(&m);
        let r = Region::cap(&geo, &spherical_to_cartesian(ct, cp), aperture).unwrap();
        let l = lift_region(&m, &r).unwrap();
        for k in 0..2 {
            prop_assert!((l.upstairs_fractions[k] - l.downstairs_fraction / 2.0).abs() < 1e-6);
            prop_assert!((l.upstairs_areas[k] - l.downstairs_area).abs() < 1e-6);
        }
    }
}
