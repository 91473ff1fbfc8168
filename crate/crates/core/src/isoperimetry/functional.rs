use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{refine_with, FlowOptions};
use super::sweep::{cap_sweep_with, ProfileCurve, CENTER_STRIDE};
use crate::curvature::gauss_curvature;
use crate::error::{Error, Result};
use crate::metric::ConformalMetric;
use crate::surface::Geometry;

/// Slack allowed on the curvature lower bound before the comparison is refused.
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// Margin below which the comparison counts as violated.
pub const MARGIN_TOL: f64 = 1e-6;

/// Cap sweep followed, when `refine` is set, by the constrained curve flow on
/// each witness. Refined witnesses replace sweep witnesses only when they
/// lower the area.
pub fn profile(m: &ConformalMetric, volumes: &[f64], refine: bool) -> Result<ProfileCurve> {
    let geo = Geometry::new(m);
    let mut curve = cap_sweep_with(&geo, volumes, CENTER_STRIDE)?;
    if refine {
        let opts = FlowOptions::default();
        let total = curve.total_volume;
        let refined: Vec<_> = curve
            .samples
            .par_iter()
            .map(|s| refine_with(&geo, &s.witness, s.v, &opts))
            .collect();
        for (s, out) in curve.samples.iter_mut().zip(refined) {
            let out = out?;
            if out.self_intersection || out.kept_input || out.region == s.witness {
                continue;
            }
            if out.area < s.area {
                s.area = out.area;
                s.normalized = out.area / total;
                s.witness = out.region;
                s.refined = true;
            }
        }
    }
    Ok(curve)
}

/// Normalized minimal boundary area at fraction `v` (an upper bound for
/// general metrics, exact for the round ones).
pub fn lg_functional(m: &ConformalMetric, v: f64) -> Result<f64> {
    let p = profile(m, &[v], true)?;
    match p.samples.first() {
        Some(s) => Ok(s.normalized),
        None => Err(Error::Bracket(
            p.failures
                .first()
                .map_or_else(|| "no witness".into(), |f| f.reason.clone()),
        )),
    }
}

/// Normalized profile of the model sphere of curvature `k`.
pub fn model_profile(v: f64, k: f64) -> f64 {
    (v * (1.0 - v)).sqrt() * k.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgEntry {
    pub v: f64,
    pub value: f64,
    pub model: f64,
    pub margin: f64,
    pub witness_kind: String,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgReport {
    pub k: f64,
    pub min_gauss_curvature: f64,
    pub entries: Vec<LgEntry>,
    pub min_margin: f64,
    pub holds: bool,
}

/// Compare the computed profile with the model sphere of the same curvature
/// bound. Refuses with [`Error::Hypothesis`] when `K_ĝ ≥ K` fails somewhere.
pub fn check_levy_gromov(m: &ConformalMetric, volumes: &[f64]) -> Result<LgReport> {
    check_levy_gromov_with(m, volumes, true)
}

pub fn check_levy_gromov_with(m: &ConformalMetric, volumes: &[f64], refine: bool) -> Result<LgReport> {
    let k = m.k();
    if !(k > 0.0) {
        return Err(Error::Hypothesis(format!("curvature bound K = {k} is not positive")));
    }
    let field = gauss_curvature(m)?;
    if field.min_value < k - HYPOTHESIS_TOL {
        let (i, j) = m.grid().coords(field.argmin);
        return Err(Error::Hypothesis(format!(
            "Gauss curvature {:.6e} at node ({i}, {j}) is below K = {k}",
            field.min_value
        )));
    }
    let p = profile(m, volumes, refine)?;
    if let Some(f) = p.failures.first() {
        return Err(Error::Bracket(format!("v = {}: {}", f.v, f.reason)));
    }
    let entries: Vec<LgEntry> = p
        .samples
        .iter()
        .map(|s| {
            let model = model_profile(s.v, k);
            LgEntry {
                v: s.v,
                value: s.normalized,
                model,
                margin: s.normalized - model,
                witness_kind: s.witness.kind_name().into(),
                refined: s.refined,
            }
        })
        .collect();
    let min_margin = entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min);
    info!("profile comparison: minimum margin {min_margin:.3e}");
    Ok(LgReport {
        k,
        min_gauss_curvature: field.min_value,
        holds: min_margin >= -MARGIN_TOL,
        entries,
        min_margin,
    })
}
