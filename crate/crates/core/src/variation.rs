//! First variations of volume and boundary area under conformal changes and
//! boundary displacements, and the descent construction built from them.
//!
//! Regions are handled through their oriented boundary: the region is the
//! left side of the curve (a complement region uses the reversed curve).

use log::debug;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::fields::{bump, mollifier};
use crate::grid::geodesic_distance;
use crate::isoperimetry::{Region, RegionKind};
use crate::metric::{Base, ConformalMetric};
use crate::quadrature::{integrate_volume, VolumePotential};
use crate::surface::Geometry;
use crate::Vec3;

/// Dimension of the surfaces handled here.
pub const DIM: f64 = 2.0;
/// Step of the central differences on the conformal family.
pub const CONFORMAL_FD_STEP: f64 = 1e-3;
/// Step of the central differences on boundary displacements.
pub const FLOW_FD_STEP: f64 = 1e-3;
/// Largest curvature deviation accepted for a constant-curvature boundary.
pub const CONSTANCY_TOL: f64 = 1e-2;
/// Default conformal parameters of the correction and slope measurements.
pub const DEFAULT_T_SAMPLES: [f64; 6] = [-1e-2, -5e-3, -2.5e-3, 2.5e-3, 5e-3, 1e-2];
/// One-sided parameters of the slope fit.
pub const SLOPE_T_SAMPLES: [f64; 3] = [2.5e-3, 5e-3, 1e-2];
/// Fraction tolerance of the correction root solve.
pub const CORRECTION_TOL: f64 = 1e-13;

/// The boundary of `r` oriented with the region on its left.
pub fn oriented_boundary(r: &Region) -> Result<Curve> {
    match (&r.kind, &r.boundary) {
        (RegionKind::GridIndicator { .. }, _) | (_, None) => Err(Error::Precondition(
            "variations need a region bounded by one curve".into(),
        )),
        (_, Some(c)) if r.complement => Ok(c.reversed()),
        (_, Some(c)) => Ok(c.clone()),
    }
}

/// `∫_Ω f dvol_ĝ` over the left side of `c` (one sheet on the projective plane).
pub fn region_integral(m: &ConformalMetric, c: &Curve, f: &[f64]) -> f64 {
    VolumePotential::for_metric(m, Some(f)).enclosed(c.vertices())
}

/// `∫_∂Ω f dℓ_ĝ`.
pub fn boundary_integral(m: &ConformalMetric, c: &Curve, f: &[f64]) -> f64 {
    Geometry::new(m).integrate_grid_field(c, f)
}

/// `∫_M f dvol_ĝ`.
pub fn total_integral(m: &ConformalMetric, f: &[f64]) -> f64 {
    integrate_volume(m, Some(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalVariation {
    pub dv_dt: f64,
    pub da_dt: f64,
    pub dv_dt_fd: f64,
    pub da_dt_fd: f64,
}

/// Agreement rule between an analytic derivative and its finite difference.
pub fn fd_agrees(analytic: f64, fd: f64) -> bool {
    (analytic - fd).abs() <= 1e-4f64.max(1e-2 * analytic.abs())
}

/// Derivatives of `V(Ω)` and `A(∂Ω)` along `e^{2tw}ĝ` at `t = 0`:
/// `n∫_Ω w` and `(n−1)∫_∂Ω w`, checked against central differences.
pub fn first_variation_conformal(m: &ConformalMetric, region: &Region, w: &[f64]) -> Result<ConformalVariation> {
    let c = oriented_boundary(region)?;
    if w.len() != m.grid().len() {
        return Err(Error::Domain("perturbation has the wrong length".into()));
    }
    let dv_dt = DIM * region_integral(m, &c, w);
    let da_dt = (DIM - 1.0) * boundary_integral(m, &c, w);
    let h = CONFORMAL_FD_STEP;
    let measure = |t: f64| -> Result<(f64, f64)> {
        let mt = m.perturbed(w, t)?;
        let geo = Geometry::new(&mt);
        Ok((geo.enclosed(&c), geo.length(&c)))
    };
    let (vp, ap) = measure(h)?;
    let (vm, am) = measure(-h)?;
    let out = ConformalVariation {
        dv_dt,
        da_dt,
        dv_dt_fd: (vp - vm) / (2.0 * h),
        da_dt_fd: (ap - am) / (2.0 * h),
    };
    if !fd_agrees(out.dv_dt, out.dv_dt_fd) || !fd_agrees(out.da_dt, out.da_dt_fd) {
        return Err(Error::Validation(format!(
            "conformal first variation disagrees with finite differences: {out:?}"
        )));
    }
    Ok(out)
}

/// Normal speed `φ` of a boundary displacement, supported near a boundary
/// point and normalized to `∫_∂Ω φ dℓ_ĝ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalField {
    pub support_center: Vec3,
    /// Round geodesic radius of the support.
    pub support_radius: f64,
    /// One value per boundary vertex.
    pub phi: Vec<f64>,
}

impl NormalField {
    pub fn new(m: &ConformalMetric, region: &Region, x: &Vec3, radius: f64) -> Result<Self> {
        let c = oriented_boundary(region)?;
        let x = c.vertices()[c.nearest_vertex(x)];
        let raw: Vec<f64> = c
            .vertices()
            .iter()
            .map(|p| mollifier(geodesic_distance(&x, p) / radius))
            .collect();
        let mass = Geometry::new(m).integrate_vertex_field(&c, &raw);
        if mass <= 0.0 {
            return Err(Error::Support(format!(
                "no boundary vertex within {radius} of the support center"
            )));
        }
        Ok(Self {
            support_center: x,
            support_radius: radius,
            phi: raw.iter().map(|p| p / mass).collect(),
        })
    }
}

/// `Φ_s(∂Ω)`: each vertex moved by ĝ-distance `s·φ` along the inner normal.
pub fn displace(m: &ConformalMetric, c: &Curve, nf: &NormalField, s: f64) -> Result<Curve> {
    if nf.phi.len() != c.len() {
        return Err(Error::Domain("normal field does not match the boundary".into()));
    }
    let grid = m.grid();
    let offsets: Vec<f64> = c
        .vertices()
        .iter()
        .zip(&nf.phi)
        .map(|(p, f)| s * f * (-grid.interpolate(m.u(), p)).exp())
        .collect();
    c.displaced(&c.inner_normals(), &offsets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowVariation {
    pub dv_ds: f64,
    pub da_ds: f64,
    /// Mean geodesic curvature of the boundary.
    pub lambda: f64,
    pub dv_ds_fd: f64,
    pub da_ds_fd: f64,
}

/// Derivatives of `V(Ω)` and `A(∂Ω)` along the displacement `Φ_s`:
/// `−∫φ` and `−λ∫φ` for a constant-curvature boundary.
pub fn first_variation_flow(m: &ConformalMetric, region: &Region, nf: &NormalField) -> Result<FlowVariation> {
    let c = oriented_boundary(region)?;
    let geo = Geometry::new(m);
    let (lambda, deviation) = geo.curvature_stats(&c);
    if deviation > CONSTANCY_TOL {
        return Err(Error::Precondition(format!(
            "boundary curvature varies by {deviation:.3e}, above {CONSTANCY_TOL}"
        )));
    }
    let mass = geo.integrate_vertex_field(&c, &nf.phi);
    let h = FLOW_FD_STEP;
    let measure = |s: f64| -> Result<(f64, f64)> {
        let moved = displace(m, &c, nf, s)?;
        Ok((geo.enclosed(&moved), geo.length(&moved)))
    };
    let (vp, ap) = measure(h)?;
    let (vm, am) = measure(-h)?;
    let out = FlowVariation {
        dv_ds: -mass,
        da_ds: -lambda * mass,
        lambda,
        dv_ds_fd: (vp - vm) / (2.0 * h),
        da_ds_fd: (ap - am) / (2.0 * h),
    };
    if (out.dv_ds - out.dv_ds_fd).abs() > 1e-3 || (out.da_ds - out.da_ds_fd).abs() > 1e-3 {
        return Err(Error::Validation(format!(
            "displacement first variation disagrees with finite differences: {out:?}"
        )));
    }
    Ok(out)
}

/// Conformal direction with `∫_∂Ω u = −1`, `∫_Ω u = 0`, `∫_M u = 0`,
/// supported in `B_{2r}(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentPerturbation {
    pub u: Vec<f64>,
    pub support_center: Vec3,
    pub support_radius: f64,
    /// `(∫_∂Ω u + 1, ∫_Ω u, ∫_M u)`.
    pub constraint_residuals: [f64; 3],
    /// Unit bumps on the boundary, inside and outside the region.
    pub bumps: [Vec<f64>; 3],
    pub coefficients: [f64; 3],
}

impl DescentPerturbation {
    /// The same bumps recombined so that `∫_Ω u = region_mass` instead of 0
    /// (with the other two constraints kept).
    pub fn with_region_mass(&self, m: &ConformalMetric, region: &Region, region_mass: f64) -> Result<Vec<f64>> {
        let c = oriented_boundary(region)?;
        let coeffs = solve_constraints(m, &c, &self.bumps, [-1.0, region_mass, 0.0])?;
        Ok(combine(&self.bumps, &coeffs))
    }
}

fn combine(bumps: &[Vec<f64>; 3], c: &[f64; 3]) -> Vec<f64> {
    (0..bumps[0].len())
        .map(|n| c[0] * bumps[0][n] + c[1] * bumps[1][n] + c[2] * bumps[2][n])
        .collect()
}

/// The three constraint functionals applied to a field.
fn constraint_values(m: &ConformalMetric, c: &Curve, f: &[f64]) -> [f64; 3] {
    [
        boundary_integral(m, c, f),
        region_integral(m, c, f),
        total_integral(m, f),
    ]
}

fn solve_constraints(m: &ConformalMetric, c: &Curve, bumps: &[Vec<f64>; 3], rhs: [f64; 3]) -> Result<[f64; 3]> {
    let cols: Vec<[f64; 3]> = bumps.iter().map(|b| constraint_values(m, c, b)).collect();
    let a = Matrix3::from_fn(|i, j| cols[j][i]);
    let x = a
        .lu()
        .solve(&Vector3::from(rhs))
        .ok_or_else(|| Error::Support("constraint system is singular for these supports".into()))?;
    Ok([x[0], x[1], x[2]])
}

/// Bump of the given radius, mirrored to the antipode on the projective plane.
fn lifted_bump(m: &ConformalMetric, center: &Vec3, radius: f64) -> Vec<f64> {
    let b = bump(m.grid(), center, radius, 1.0);
    match m.base() {
        Base::Sphere => b,
        Base::ProjectivePlane => {
            let mirror = bump(m.grid(), &-center, radius, 1.0);
            b.iter().zip(mirror).map(|(a, b)| a + b).collect()
        }
    }
}

/// Build the descent direction at boundary point `x` with inner radius `r`.
///
/// `w₁` is a bump of radius `r` on the boundary at `x`; `w₂` and `w₃` are
/// bumps of radius `0.45r` centered `1.5r` inside and outside the region
/// along the normal at `x`, so their supports lie in `B_{2r}(x) \ B_r(x)`.
/// The three coefficients solve the constraint system exactly.
pub fn build_descent_perturbation(
    m: &ConformalMetric,
    region: &Region,
    x: &Vec3,
    r: f64,
) -> Result<DescentPerturbation> {
    let c = oriented_boundary(region)?;
    let k = c.nearest_vertex(x);
    let x = c.vertices()[k];
    let nu = c.inner_normals()[k];
    let r_side = 0.45 * r;
    let along = |d: f64| (x * d.cos() + nu * d.sin()).normalize();
    let (inner, outer) = (along(1.5 * r), along(-1.5 * r));
    // the side bumps must clear the boundary
    for (name, p) in [("interior", &inner), ("exterior", &outer)] {
        let clearance = c
            .vertices()
            .iter()
            .map(|q| geodesic_distance(p, q))
            .fold(f64::INFINITY, f64::min);
        if clearance <= r_side {
            return Err(Error::Support(format!(
                "{name} support at radius {r} crosses the boundary (clearance {clearance:.3e})"
            )));
        }
    }
    let bumps = [
        lifted_bump(m, &x, r),
        lifted_bump(m, &inner, r_side),
        lifted_bump(m, &outer, r_side),
    ];
    for (name, b) in ["boundary", "interior", "exterior"].iter().zip(&bumps) {
        if !b.iter().any(|&v| v > 0.0) {
            return Err(Error::Support(format!(
                "{name} support at radius {r} contains no grid node"
            )));
        }
    }
    let coefficients = solve_constraints(m, &c, &bumps, [-1.0, 0.0, 0.0])?;
    let u = combine(&bumps, &coefficients);
    let [l, i_omega, i_m] = constraint_values(m, &c, &u);
    Ok(DescentPerturbation {
        u,
        support_center: x,
        support_radius: 2.0 * r,
        constraint_residuals: [l + 1.0, i_omega, i_m],
        bumps,
        coefficients,
    })
}

/// Default inner radius: four polar grid spacings.
pub fn default_radius(m: &ConformalMetric) -> f64 {
    4.0 * m.grid().d_theta()
}

/// Largest radius tried by [`build_descent_perturbation_auto`].
pub const MAX_RADIUS: f64 = 0.3;

/// [`build_descent_perturbation`] starting from [`default_radius`] and
/// doubling on support errors up to [`MAX_RADIUS`].
pub fn build_descent_perturbation_auto(m: &ConformalMetric, region: &Region, x: &Vec3) -> Result<DescentPerturbation> {
    let mut r = default_radius(m);
    loop {
        match build_descent_perturbation(m, region, x, r) {
            Err(Error::Support(e)) if r < MAX_RADIUS => {
                debug!("radius {r}: {e}");
                r = (2.0 * r).min(MAX_RADIUS);
            }
            other => return other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeCorrection {
    /// `(t, s(t))` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of `log|s|` against `log|t|` over nonzero samples.
    pub exponent: Option<f64>,
}

/// `V_{ĝ^{t,u}}(Φ_s(Ω)) / V_{ĝ^{t,u}}(M)`.
fn transported_fraction(mt: &ConformalMetric, c: &Curve) -> f64 {
    let geo = Geometry::new(mt);
    geo.enclosed(c) / geo.total_volume()
}

/// The boundary polyline's own fraction, which is the root target. Caps are
/// measured as true caps elsewhere, so up to `1e−4` of slack is accepted.
fn check_target(m: &ConformalMetric, c: &Curve, v: f64) -> Result<f64> {
    let f0 = transported_fraction(m, c);
    if (f0 - v).abs() > 1e-4 {
        return Err(Error::Precondition(format!(
            "region fraction {f0:.9} is not the target {v}"
        )));
    }
    Ok(f0)
}

/// Solve `F(s, t) = F(0, 0)` for `s` with `|s| ≤ 10|t|`.
fn solve_correction(m: &ConformalMetric, c: &Curve, u: &[f64], nf: &NormalField, target: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let mt = m.perturbed(u, t)?;
    let geo = Geometry::new(&mt);
    let total = geo.total_volume();
    let f = |s: f64| -> Result<f64> { Ok(geo.enclosed(&displace(m, c, nf, s)?) / total - target) };
    let (mut a, mut b) = (-10.0 * t.abs(), 10.0 * t.abs());
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa * fb > 0.0 {
        return Err(Error::Bracket(format!("no correction with |s| ≤ {b:.3e} at t = {t}")));
    }
    let f0 = f(0.0)?;
    if f0 == 0.0 {
        return Ok(0.0);
    }
    if fa * f0 < 0.0 {
        b = 0.0;
        fb = f0;
    } else {
        a = 0.0;
        fa = f0;
    }
    // Illinois regula falsi; F is nearly linear in s
    let mut side = 0;
    let mut x = 0.0;
    for _ in 0..200 {
        x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x)?;
        if fx.abs() < CORRECTION_TOL || (b - a).abs() < 1e-16 {
            return Ok(x);
        }
        if fx * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = x;
        fb = fx;
    }
    Ok(x)
}

fn fit_exponent(samples: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, s)| *t != 0.0 && *s != 0.0)
        .map(|(t, s)| (t.abs().ln(), s.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (a, _) = linear_fit(&pts);
    Some(a)
}

/// Least-squares `(slope, intercept)`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Displacement size `s(t)` that restores the volume fraction of `Ω` along the
/// conformal family `e^{2tu}ĝ`.
pub fn volume_correction(
    m: &ConformalMetric,
    region: &Region,
    u: &[f64],
    nf: &NormalField,
    v: f64,
    t_samples: &[f64],
) -> Result<VolumeCorrection> {
    let c = oriented_boundary(region)?;
    let target = check_target(m, &c, v)?;
    for &t in t_samples {
        if !t.is_finite() {
            return Err(Error::Domain(format!("conformal parameter {t} is not finite")));
        }
    }
    let samples = t_samples
        .par_iter()
        .map(|&t| solve_correction(m, &c, u, nf, target, t).map(|s| (t, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeCorrection {
        exponent: fit_exponent(&samples),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub conformal: ConformalVariation,
    pub flow: FlowVariation,
    pub correction: VolumeCorrection,
    /// `(t, L̃(t))` on the one-sided samples.
    pub transported: Vec<(f64, f64)>,
    pub measured_slope: f64,
    /// `−(n−1)/V_ĝ(M)`.
    pub bound: f64,
    /// `measured_slope ≤ bound + 0.1·|bound|`.
    pub meets_bound: bool,
}

/// Slope at `0⁺` of the transported normalized boundary area
/// `L̃(t) = A_{ĝ^{t,u}}(Φ_{s(t)}∂Ω) / V_{ĝ^{t,u}}(M)`.
pub fn descent_slope(
    m: &ConformalMetric,
    region: &Region,
    u: &[f64],
    nf: &NormalField,
    v: f64,
) -> Result<VariationReport> {
    descent_slope_with(m, region, u, nf, v, &SLOPE_T_SAMPLES)
}

pub fn descent_slope_with(
    m: &ConformalMetric,
    region: &Region,
    u: &[f64],
    nf: &NormalField,
    v: f64,
    t_samples: &[f64],
) -> Result<VariationReport> {
    let c = oriented_boundary(region)?;
    let target = check_target(m, &c, v)?;
    let conformal = first_variation_conformal(m, region, u)?;
    let flow = first_variation_flow(m, region, nf)?;
    let mut all_t: Vec<f64> = t_samples.iter().flat_map(|&t| [-t, t]).collect();
    all_t.sort_by(f64::total_cmp);
    let correction = volume_correction(m, region, u, nf, v, &all_t)?;
    let geo = Geometry::new(m);
    let l0 = geo.length(&c) / geo.total_volume();
    let transported = t_samples
        .par_iter()
        .map(|&t| -> Result<(f64, f64)> {
            let s = correction
                .samples
                .iter()
                .find(|(tt, _)| *tt == t)
                .map(|p| p.1)
                .expect("every slope parameter has a correction");
            let mt = m.perturbed(u, t)?;
            let gt = Geometry::new(&mt);
            let moved = displace(m, &c, nf, s)?;
            debug_assert!((gt.enclosed(&moved) / gt.total_volume() - target).abs() < 1e-9);
            Ok((t, gt.length(&moved) / gt.total_volume()))
        })
        .collect::<Result<Vec<_>>>()?;
    // difference quotients D(t) = a + b·t; the slope at 0⁺ is a
    let quotients: Vec<(f64, f64)> = transported.iter().map(|&(t, l)| (t, (l - l0) / t)).collect();
    let measured_slope = if quotients.len() >= 2 {
        linear_fit(&quotients).1
    } else {
        quotients[0].1
    };
    let bound = -(DIM - 1.0) / geo.total_volume();
    Ok(VariationReport {
        conformal,
        flow,
        correction,
        transported,
        measured_slope,
        bound,
        meets_bound: measured_slope <= bound + 0.1 * bound.abs(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::{spherical_to_cartesian, SphereGrid};

    fn round() -> ConformalMetric {
        ConformalMetric::round(Base::Sphere, SphereGrid::standard(), 1.0)
    }

    fn cap(m: &ConformalMetric, theta: f64) -> Region {
        Region::cap(&Geometry::new(m), &Vec3::z(), theta).unwrap()
    }

    #[test]
    fn constant_direction_on_hemisphere() {
        let m = round();
        let one = vec![1.0; m.grid().len()];
        let cv = first_variation_conformal(&m, &cap(&m, PI / 2.0), &one).unwrap();
        assert!((cv.dv_dt - 4.0 * PI).abs() < 1e-6);
        assert!((cv.da_dt - 2.0 * PI).abs() < 1e-4);
        assert!((total_integral(&m, &one) * DIM - 8.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn displacement_of_a_cap() {
        let m = round();
        let r = cap(&m, PI / 3.0);
        let x = r.boundary.as_ref().unwrap().vertices()[0];
        let nf = NormalField::new(&m, &r, &x, 0.2).unwrap();
        let fv = first_variation_flow(&m, &r, &nf).unwrap();
        assert!((fv.dv_ds + 1.0).abs() < 1e-12);
        assert!((fv.da_ds + 1.0 / (PI / 3.0).tan()).abs() < 1e-3);
        assert!((fv.da_ds / fv.dv_ds - fv.lambda).abs() < 1e-12);
    }

    #[test]
    fn descent_construction_on_a_cap() {
        let m = round();
        let r = cap(&m, PI / 3.0);
        let x = spherical_to_cartesian(PI / 3.0, 0.0);
        let d = build_descent_perturbation(&m, &r, &x, 0.2).unwrap();
        for res in d.constraint_residuals {
            assert!(res.abs() < 1e-8, "{:?}", d.constraint_residuals);
        }
        // vanishes outside B_{2r}(x)
        for n in 0..m.grid().len() {
            if geodesic_distance(&m.grid().position(n), &d.support_center) >= 0.4 {
                assert_eq!(d.u[n], 0.0);
            }
        }
        let cv = first_variation_conformal(&m, &r, &d.u).unwrap();
        assert!((cv.da_dt + 1.0).abs() < 1e-8);
        assert!(cv.dv_dt.abs() < 1e-8);
    }

    #[test]
    fn supports_that_cross_the_boundary_are_rejected() {
        let m = round();
        let r = cap(&m, 0.2);
        let x = r.boundary.as_ref().unwrap().vertices()[0];
        assert!(matches!(
            build_descent_perturbation(&m, &r, &x, 0.3),
            Err(Error::Support(_))
        ));
    }
}
