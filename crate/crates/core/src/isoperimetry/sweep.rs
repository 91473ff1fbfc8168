use std::f64::consts::PI;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::region::{cap_integrals, Region, RegionKind, CAP_VERTICES};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::metric::{Base, ConformalMetric};
use crate::surface::Geometry;
use crate::Vec3;

/// Every `CENTER_STRIDE`-th node in each direction is a cap center.
pub const CENTER_STRIDE: usize = 8;
/// Fraction tolerance of the aperture solve.
pub const APERTURE_TOL: f64 = 1e-10;
const MAX_APERTURE_ITERS: usize = 100;
/// Relative area difference below which two caps tie.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub v: f64,
    pub area: f64,
    /// `area / V_ĝ(M)`.
    pub normalized: f64,
    pub witness: Region,
    /// Whether the witness came out of the curve flow rather than the sweep.
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub v: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub base: Base,
    pub total_volume: f64,
    /// Sorted by `v`.
    pub samples: Vec<ProfileSample>,
    pub failures: Vec<SweepFailure>,
}

impl ProfileCurve {
    pub fn sample(&self, v: f64) -> Option<&ProfileSample> {
        self.samples.iter().find(|s| s.v == v)
    }
}

/// Cap centers: sub-lattice nodes, restricted to the northern hemisphere on
/// the projective plane (one representative per antipodal pair).
pub fn cap_centers(m: &ConformalMetric, stride: usize) -> Vec<Vec3> {
    let g = m.grid();
    let mut out = Vec::new();
    for i in (0..g.n_theta()).step_by(stride.max(1)) {
        if m.base() == Base::ProjectivePlane && g.theta(i) >= PI / 2.0 {
            continue;
        }
        for j in (0..g.n_phi()).step_by(stride.max(1)) {
            out.push(g.position(g.index(i, j)));
        }
    }
    out
}

/// A cap of prescribed fraction about a fixed center.
#[derive(Debug, Clone)]
pub struct SolvedCap {
    pub aperture: f64,
    pub boundary: Curve,
    pub fraction: f64,
    pub area: f64,
}

/// Largest aperture of a valid cap: the hemisphere on the projective plane.
fn max_aperture(base: Base) -> f64 {
    match base {
        Base::Sphere => PI,
        Base::ProjectivePlane => PI / 2.0,
    }
}

/// Solve for the aperture of the cap about `center` with fraction `f`, by
/// Newton steps on `dV/dα = ∮ e^{2u} dℓ₀` safeguarded by bisection.
pub fn solve_cap(geo: &Geometry, center: &Vec3, f: f64) -> Result<SolvedCap> {
    let base = geo.metric().base();
    let total = geo.total_volume();
    let (mut lo, mut hi) = (0.0, max_aperture(base));
    // round-metric guess
    let mut alpha = match base {
        Base::Sphere => (1.0 - 2.0 * f).clamp(-1.0, 1.0).acos(),
        Base::ProjectivePlane => (1.0 - f).clamp(0.0, 1.0).acos(),
    };
    let mut best: Option<SolvedCap> = None;
    for _ in 0..MAX_APERTURE_ITERS {
        if !(alpha > lo && alpha < hi) {
            alpha = 0.5 * (lo + hi);
        }
        let c = Curve::geodesic_circle(center, alpha, CAP_VERTICES)?;
        let (volume, length, rate) = cap_integrals(geo, center, alpha, &c);
        let frac = volume / total;
        let err = frac - f;
        let cap = SolvedCap {
            aperture: alpha,
            fraction: frac,
            area: length,
            boundary: c,
        };
        let done = err.abs() < APERTURE_TOL;
        let slope = rate / total;
        if best.as_ref().is_none_or(|b| err.abs() < (b.fraction - f).abs()) {
            best = Some(cap);
        }
        if done {
            break;
        }
        if err > 0.0 {
            hi = alpha;
        } else {
            lo = alpha;
        }
        if hi - lo < 1e-15 {
            break;
        }
        alpha -= err / slope;
    }
    let best = best.expect("at least one aperture evaluated");
    if (best.fraction - f).abs() > 1e-8 {
        return Err(Error::Bracket(format!(
            "no aperture reaches fraction {f} (closest {:.3e} at α = {:.6})",
            best.fraction, best.aperture
        )));
    }
    Ok(best)
}

/// Cap-family upper bound on the normalized isoperimetric profile.
///
/// For each `v` the best cap of fraction `v` and the complement of the best
/// cap of fraction `1 − v` compete; the smaller area wins, with ties going to
/// the direct cap and then to the lowest center index.
pub fn cap_sweep(m: &ConformalMetric, volumes: &[f64]) -> Result<ProfileCurve> {
    cap_sweep_with(&Geometry::new(m), volumes, CENTER_STRIDE)
}

pub fn cap_sweep_with(geo: &Geometry, volumes: &[f64], stride: usize) -> Result<ProfileCurve> {
    for &v in volumes {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain(format!("volume fraction {v} outside (0, 1)")));
        }
    }
    let mut volumes = volumes.to_vec();
    volumes.sort_by(f64::total_cmp);
    volumes.dedup();
    let centers = cap_centers(geo.metric(), stride);
    let total = geo.total_volume();

    // every fraction needed, each solved at every center
    let mut fractions: Vec<f64> = volumes.iter().flat_map(|&v| [v, 1.0 - v]).collect();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let jobs: Vec<(usize, usize)> = (0..fractions.len())
        .flat_map(|a| (0..centers.len()).map(move |b| (a, b)))
        .collect();
    let solved: Vec<Option<SolvedCap>> = jobs
        .par_iter()
        .map(|&(a, b)| match solve_cap(geo, &centers[b], fractions[a]) {
            Ok(s) => Some(s),
            Err(e) => {
                debug!("cap at center {b}, fraction {}: {e}", fractions[a]);
                None
            }
        })
        .collect();
    let best_for = |f: f64| -> Option<(usize, &SolvedCap)> {
        let a = fractions.iter().position(|&x| x == f)?;
        let row = &solved[a * centers.len()..(a + 1) * centers.len()];
        let mut best: Option<(usize, &SolvedCap)> = None;
        for (b, s) in row.iter().enumerate() {
            if let Some(s) = s {
                // near-equal areas count as ties so that quadrature noise
                // does not pick among equivalent centers
                if best.is_none_or(|(_, w)| s.area < w.area * (1.0 - TIE_TOL)) {
                    best = Some((b, s));
                }
            }
        }
        best
    };

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for &v in &volumes {
        let direct = best_for(v);
        let comp = best_for(1.0 - v);
        let pick = match (direct, comp) {
            (Some(d), Some(c)) => Some(if c.1.area < d.1.area * (1.0 - TIE_TOL) {
                (c, true)
            } else {
                (d, false)
            }),
            (Some(d), None) => Some((d, false)),
            (None, Some(c)) => Some((c, true)),
            (None, None) => None,
        };
        let Some(((b, cap), complement)) = pick else {
            failures.push(SweepFailure {
                v,
                reason: "no cap center brackets this fraction".into(),
            });
            continue;
        };
        let witness = Region {
            kind: RegionKind::Cap {
                center: centers[b],
                aperture: cap.aperture,
            },
            boundary: Some(cap.boundary.clone()),
            complement,
            volume_fraction: if complement { 1.0 - cap.fraction } else { cap.fraction },
        };
        samples.push(ProfileSample {
            v,
            area: cap.area,
            normalized: cap.area / total,
            witness,
            refined: false,
        });
    }
    Ok(ProfileCurve {
        base: geo.metric().base(),
        total_volume: total,
        samples,
        failures,
    })
}
