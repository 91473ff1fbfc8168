//! The antipodal double cover S² → RP²: lifting metrics and regions, the
//! volume and area factor identities, and the factor-2 functional relation.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::gauss_curvature;
use crate::error::{Error, Result};
use crate::grid::geodesic_distance;
use crate::isoperimetry::{cap_sweep, measure, Region, RegionKind};
use crate::metric::{evenness_defect, Base, ConformalMetric};
use crate::quadrature::integrate_volume;
use crate::surface::Geometry;

/// Largest antipodal defect of `u` accepted as even.
pub const LIFT_EVENNESS_TOL: f64 = 1e-12;
/// Relative tolerance on the lifted total volume.
pub const LIFT_VOLUME_TOL: f64 = 1e-9;
/// Tolerance of the fraction and area identities.
pub const IDENTITY_TOL: f64 = 1e-6;

/// The sphere metric `Π*g` of a projective-plane metric.
pub fn lift_metric(m: &ConformalMetric) -> Result<ConformalMetric> {
    if m.base() != Base::ProjectivePlane {
        return Err(Error::Domain("only projective-plane metrics can be lifted".into()));
    }
    let (defect, node) = evenness_defect(m.grid(), m.u());
    if defect > LIFT_EVENNESS_TOL {
        return Err(Error::Symmetry(format!("u is odd by {defect:.3e} at node {node}")));
    }
    let up = m.with_base(Base::Sphere)?;
    let quotient = integrate_volume(m, None);
    let lifted = integrate_volume(&up, None);
    if (lifted - 2.0 * quotient).abs() > LIFT_VOLUME_TOL * lifted {
        return Err(Error::Validation(format!(
            "lifted volume {lifted} is not twice the quotient volume {quotient}"
        )));
    }
    let (kd, ku) = (gauss_curvature(m)?, gauss_curvature(&up)?);
    if kd.values != ku.values {
        return Err(Error::Validation("lifting changed the curvature".into()));
    }
    Ok(up)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedRegion {
    /// The two antipodal components on the sphere.
    pub upstairs: [Region; 2],
    pub downstairs: Region,
    /// Minimal geodesic distance between the component boundaries.
    pub separation: f64,
    /// Sphere volume fractions of the components.
    pub upstairs_fractions: [f64; 2],
    /// Boundary lengths of the components.
    pub upstairs_areas: [f64; 2],
    pub downstairs_fraction: f64,
    pub downstairs_area: f64,
}

/// Lift a projective-plane region to its two antipodal sphere components and
/// check `V(Ω̃ⁱ)/V(S²) = v/2` and `A(∂Ω̃ⁱ) = A(∂Ω)`.
pub fn lift_region(m: &ConformalMetric, r: &Region) -> Result<LiftedRegion> {
    let up = lift_metric(m)?;
    if r.complement {
        return Err(Error::Precondition(
            "complement regions lift to a connected band".into(),
        ));
    }
    let down_geo = Geometry::new(m);
    let (v, a) = measure(&down_geo, r)?;
    if v > 0.5 + IDENTITY_TOL {
        return Err(Error::Precondition(format!("downstairs fraction {v} exceeds 1/2")));
    }
    let geo = Geometry::new(&up);
    let boundary = r
        .boundary
        .as_ref()
        .ok_or_else(|| Error::Domain("region has no boundary curve to lift".into()))?;
    let upstairs = match &r.kind {
        RegionKind::Cap { center, aperture } => [
            Region::cap(&geo, center, *aperture)?,
            Region::cap(&geo, &-center, *aperture)?,
        ],
        RegionKind::Polygon => [
            Region::polygon(&geo, boundary.clone())?,
            Region::polygon(&geo, boundary.antipodal())?,
        ],
        RegionKind::GridIndicator { .. } => {
            return Err(Error::Domain("grid-indicator regions are not lifted".into()));
        }
    };
    let (f0, a0) = measure(&geo, &upstairs[0])?;
    let (f1, a1) = measure(&geo, &upstairs[1])?;
    for (f, area) in [(f0, a0), (f1, a1)] {
        if (f - v / 2.0).abs() > IDENTITY_TOL || (area - a).abs() > IDENTITY_TOL {
            return Err(Error::Validation(format!(
                "lift identities fail: fraction {f} vs {}, area {area} vs {a}",
                v / 2.0
            )));
        }
    }
    let separation = match &r.kind {
        RegionKind::Cap { aperture, .. } => (std::f64::consts::PI - 2.0 * aperture).max(0.0),
        _ => {
            let other = upstairs[1].boundary.as_ref().map(|c| c.vertices()).unwrap_or_default();
            boundary
                .vertices()
                .iter()
                .flat_map(|p| other.iter().map(move |q| geodesic_distance(p, q)))
                .fold(f64::INFINITY, f64::min)
        }
    };
    if separation <= 0.0 {
        warn!("lifted components touch (downstairs fraction {v})");
    }
    Ok(LiftedRegion {
        upstairs,
        downstairs: r.clone(),
        separation,
        upstairs_fractions: [f0, f1],
        upstairs_areas: [a0, a1],
        downstairs_fraction: v,
        downstairs_area: a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub v: f64,
    /// `A(∂Ω̃¹)/V(S²)` upstairs.
    pub upstairs: f64,
    /// `A(∂Ω)/V(RP²)` downstairs.
    pub downstairs: f64,
    pub ratio: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub entries: Vec<FactorEntry>,
    /// Largest `|upstairs − downstairs/2|`.
    pub max_defect: f64,
    pub holds: bool,
}

/// Compare the per-component functional upstairs with half the quotient
/// functional, on the sweep witness transported by `lift_region`.
pub fn factor_relation_check(m: &ConformalMetric, volumes: &[f64]) -> Result<FactorReport> {
    if let Some(v) = volumes.iter().find(|v| !(**v > 0.0 && **v <= 0.5)) {
        return Err(Error::Domain(format!("volume fraction {v} outside (0, 1/2]")));
    }
    let up = lift_metric(m)?;
    let sphere_volume = integrate_volume(&up, None);
    let quotient_volume = sphere_volume / 2.0;
    let sweep = cap_sweep(m, volumes)?;
    let entries = volumes
        .par_iter()
        .map(|&v| {
            let s = sweep
                .sample(v)
                .ok_or_else(|| Error::Bracket(format!("no witness at v = {v}")))?;
            let lift = lift_region(m, &s.witness)?;
            let upstairs = lift.upstairs_areas[0] / sphere_volume;
            let downstairs = lift.downstairs_area / quotient_volume;
            Ok(FactorEntry {
                v,
                upstairs,
                downstairs,
                ratio: upstairs / downstairs,
                separation: lift.separation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_defect = entries
        .iter()
        .map(|e| (e.upstairs - e.downstairs / 2.0).abs())
        .fold(0.0, f64::max);
    Ok(FactorReport {
        entries,
        max_defect,
        holds: max_defect <= IDENTITY_TOL,
    })
}
