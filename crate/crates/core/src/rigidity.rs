//! Admissibility of conformal deformations under the curvature lower bound,
//! the search for admissible descent directions, the scaling descent for
//! non-positive bounds, and the small-volume concentration experiment.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::curvature::{gauss_curvature, CurvatureField};
use crate::error::{Error, Result};
use crate::grid::geodesic_distance;
use crate::isoperimetry::{cap_sweep, lg_functional, profile, Region};
use crate::metric::{Base, ConformalMetric};
use crate::quadrature::VolumePotential;
use crate::variation::{
    build_descent_perturbation, default_radius, descent_slope_with, oriented_boundary, DescentPerturbation,
    NormalField, VariationReport, MAX_RADIUS,
};
use crate::Vec3;

/// Curvature slack below this counts as a violation.
pub const ADMISSIBLE_TOL: f64 = 1e-9;
/// Boundary points with less slack than this are not probed.
pub const SLACK_THRESHOLD: f64 = 1e-3;
/// Most boundary points sampled per witness.
pub const MAX_PROBE_POINTS: usize = 16;
/// Largest conformal parameter accepted by the certificate.
pub const MAX_T: f64 = 0.1;
/// Step of the scaling-descent differences.
pub const SCALING_STEP: f64 = 1e-3;
/// Radius of the displacement field used by the probe's slope measurements.
pub const PROBE_FIELD_RADIUS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admissibility {
    Admissible,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub t_checked: Vec<f64>,
    /// Minimum over nodes and parameters of `K_{ĝ^{t,w}} − K`.
    pub min_slack: f64,
    pub witness_node: usize,
    pub witness_t: f64,
    pub verdict: Admissibility,
}

impl AdmissibilityCertificate {
    pub fn is_admissible(&self) -> bool {
        self.verdict == Admissibility::Admissible
    }
}

fn certificate<I>(k: f64, metrics: I) -> Result<AdmissibilityCertificate>
where
    I: IntoIterator<Item = (f64, Result<ConformalMetric>)>,
{
    let mut cert = AdmissibilityCertificate {
        t_checked: Vec::new(),
        min_slack: f64::INFINITY,
        witness_node: 0,
        witness_t: 0.0,
        verdict: Admissibility::Admissible,
    };
    for (t, mt) in metrics {
        let field = gauss_curvature(&mt?)?;
        let slack = field.min_value - k;
        if slack < cert.min_slack {
            cert.min_slack = slack;
            cert.witness_node = field.argmin;
            cert.witness_t = t;
        }
        cert.t_checked.push(t);
    }
    if cert.t_checked.is_empty() {
        return Err(Error::Domain("no conformal parameter to check".into()));
    }
    if cert.min_slack < -ADMISSIBLE_TOL {
        cert.verdict = Admissibility::Violated;
    }
    Ok(cert)
}

/// Check `K_{e^{2tw}ĝ} ≥ K` on every node for every `t` in `t_list`.
pub fn certify_admissibility(m: &ConformalMetric, w: &[f64], t_list: &[f64]) -> Result<AdmissibilityCertificate> {
    for &t in t_list {
        if !(t.abs() <= MAX_T) {
            return Err(Error::Domain(format!(
                "conformal parameter {t} outside [−{MAX_T}, {MAX_T}]"
            )));
        }
    }
    certificate(m.k(), t_list.iter().map(|&t| (t, m.perturbed(w, t))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDescent {
    pub v: f64,
    /// `L_v` of the metric itself.
    pub value: f64,
    /// `L_v` of `g(0)`, recomputed through the family.
    pub value_at_zero: f64,
    /// Richardson-extrapolated `dL_v/dt` at `t = 0` along `g(t) = (1+t)²g`.
    pub derivative: f64,
    /// Curvature bound kept along the family for `t ≥ 0`.
    pub certificate: AdmissibilityCertificate,
}

/// Uniform scaling `g(t) = (1+t)²g` as a descent direction when `K ≤ 0`.
pub fn scaling_descent_nonpositive_k(m: &ConformalMetric, v: f64) -> Result<ScalingDescent> {
    if m.k() > 0.0 {
        return Err(Error::Domain(format!(
            "scaling descent needs a non-positive bound, got K = {}",
            m.k()
        )));
    }
    let at = |t: f64| m.shifted((1.0 + t).ln());
    let l = |t: f64| lg_functional(&at(t), v);
    let value = lg_functional(m, v)?;
    let value_at_zero = l(0.0)?;
    let h = SCALING_STEP;
    let d = |h: f64| -> Result<f64> { Ok((l(h)? - l(-h)?) / (2.0 * h)) };
    let (d1, d2) = (d(h)?, d(h / 2.0)?);
    let derivative = (4.0 * d2 - d1) / 3.0;
    let certificate = certificate(m.k(), [h, 1e-2, 1e-1].map(|t| (t, Ok(at(t)))))?;
    Ok(ScalingDescent {
        v,
        value,
        value_at_zero,
        derivative,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub v: f64,
    pub point: Vec3,
    /// `K_ĝ − K` interpolated at the point.
    pub slack: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentWitness {
    pub v: f64,
    pub region: Region,
    pub perturbation: DescentPerturbation,
    pub normal_field: NormalField,
    pub t_star: f64,
    pub certificate: AdmissibilityCertificate,
    pub slope: f64,
    pub report: VariationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    NoAdmissibleDescentFound,
    NotCritical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityVerdict {
    pub probed_points: Vec<ProbePoint>,
    pub descent_found: bool,
    pub descent_witness: Option<DescentWitness>,
    pub conclusion: Conclusion,
}

/// Conformal parameters `1e−3·2^k` tried for `t*`.
fn t_grid() -> Vec<f64> {
    (-12..=6).map(|k| 1e-3 * 2f64.powi(k)).filter(|t| *t <= MAX_T).collect()
}

/// Largest grid parameter up to which `u` stays admissible, with the
/// certificate over all grid parameters up to it.
fn largest_admissible_t(m: &ConformalMetric, u: &[f64]) -> Result<Option<(f64, AdmissibilityCertificate)>> {
    let mut best = None;
    let mut checked = Vec::new();
    for t in t_grid() {
        checked.push(t);
        let cert = certify_admissibility(m, u, &[t])?;
        if !cert.is_admissible() {
            break;
        }
        best = Some(t);
    }
    match best {
        None => Ok(None),
        Some(t) => {
            let ts: Vec<f64> = checked.into_iter().filter(|s| *s <= t).collect();
            Ok(Some((t, certify_admissibility(m, u, &ts)?)))
        }
    }
}

/// Smallest curvature slack over the nodes of the ball `B_rad(x)`.
fn ball_slack(m: &ConformalMetric, field: &CurvatureField, x: &Vec3, rad: f64) -> f64 {
    let g = m.grid();
    let mut s = f64::INFINITY;
    for n in 0..g.len() {
        if geodesic_distance(&g.position(n), x) < rad {
            s = s.min(field.values[n] - m.k());
        }
        if m.base() == Base::ProjectivePlane && geodesic_distance(&g.position(n), &-x) < rad {
            s = s.min(field.values[n] - m.k());
        }
    }
    s
}

/// Largest radius from `MAX_RADIUS` halving down to the default whose double
/// ball stays in the slack set and admits the construction.
fn probe_perturbation(
    m: &ConformalMetric,
    field: &CurvatureField,
    region: &Region,
    x: &Vec3,
) -> std::result::Result<DescentPerturbation, String> {
    let floor = default_radius(m);
    let mut r = MAX_RADIUS;
    let mut last = String::from("no radius keeps the support inside the slack set");
    while r >= floor {
        if ball_slack(m, field, x, 2.0 * r) > SLACK_THRESHOLD {
            match build_descent_perturbation(m, region, x, r) {
                Ok(d) => return Ok(d),
                Err(e) => last = format!("radius {r:.4}: {e}"),
            }
        }
        r /= 2.0;
    }
    Err(last)
}

/// Look for an admissible conformal descent direction at boundary points of
/// the profile witnesses.
pub fn rigidity_probe(m: &ConformalMetric, volumes: &[f64], points_per_volume: usize) -> Result<RigidityVerdict> {
    let field = gauss_curvature(m)?;
    if field.min_value - m.k() < -ADMISSIBLE_TOL {
        return Err(Error::Hypothesis(format!(
            "the metric itself violates the bound: K_ĝ = {:.6e} < K = {}",
            field.min_value,
            m.k()
        )));
    }
    let points = points_per_volume.clamp(1, MAX_PROBE_POINTS);
    let mut probed = Vec::new();
    for &v in volumes {
        let p = profile(m, &[v], true)?;
        let Some(sample) = p.samples.first() else {
            info!("v = {v}: no witness, skipped");
            continue;
        };
        let region = &sample.witness;
        let c = oriented_boundary(region)?;
        let n = c.len();
        for k in 0..points {
            let x = c.vertices()[k * n / points];
            let slack = m.grid().interpolate(&field.values, &x) - m.k();
            let mut note = |s: String| {
                debug!("v = {v}, point {k}: {s}");
                probed.push(ProbePoint {
                    v,
                    point: x,
                    slack,
                    note: s,
                })
            };
            if slack <= SLACK_THRESHOLD {
                note("no slack".into());
                continue;
            }
            let d = match probe_perturbation(m, &field, region, &x) {
                Ok(d) => d,
                Err(e) => {
                    note(format!("skipped: {e}"));
                    continue;
                }
            };
            let Some((t_star, cert)) = largest_admissible_t(m, &d.u)? else {
                note("no admissible parameter on the grid".into());
                continue;
            };
            let outcome = NormalField::new(m, region, &d.support_center, PROBE_FIELD_RADIUS).and_then(|nf| {
                let ts = [t_star / 4.0, t_star / 2.0, t_star];
                descent_slope_with(m, region, &d.u, &nf, region.volume_fraction, &ts).map(|r| (nf, r))
            });
            let (nf, report) = match outcome {
                Ok(x) => x,
                Err(e) => {
                    note(format!("skipped: {e}"));
                    continue;
                }
            };
            let slope = report.measured_slope;
            note(format!("t* = {t_star:.3e}, slope {slope:.6e}"));
            if slope < 0.0 && cert.is_admissible() {
                let witness = DescentWitness {
                    v,
                    region: region.clone(),
                    perturbation: d,
                    normal_field: nf,
                    t_star,
                    certificate: cert,
                    slope,
                    report,
                };
                return Ok(RigidityVerdict {
                    probed_points: probed,
                    descent_found: true,
                    descent_witness: Some(witness),
                    conclusion: Conclusion::NotCritical,
                });
            }
        }
    }
    Ok(RigidityVerdict {
        probed_points: probed,
        descent_found: false,
        descent_witness: None,
        conclusion: Conclusion::NoAdmissibleDescentFound,
    })
}

/// Re-run the stored certificate and slope of a witness.
pub fn revalidate(m: &ConformalMetric, w: &DescentWitness) -> Result<(AdmissibilityCertificate, f64)> {
    let cert = certify_admissibility(m, &w.perturbation.u, &w.certificate.t_checked)?;
    let ts = [w.t_star / 4.0, w.t_star / 2.0, w.t_star];
    let report = descent_slope_with(
        m,
        &w.region,
        &w.perturbation.u,
        &w.normal_field,
        w.region.volume_fraction,
        &ts,
    )?;
    Ok((cert, report.measured_slope))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEntry {
    pub v: f64,
    /// ĝ-barycenter of the witness, projected to the sphere.
    pub barycenter: Vec3,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub argmax: Vec3,
    pub max_curvature: f64,
    pub entries: Vec<ConcentrationEntry>,
    /// Each distance is at most 1.1 times the previous one.
    pub non_increasing: bool,
}

/// Whether the curvature maximum sits at one node (one antipodal pair on the
/// projective plane).
fn max_is_unique(m: &ConformalMetric, field: &CurvatureField) -> bool {
    let g = m.grid();
    let twin = g.antipode(field.argmax);
    field.values.iter().enumerate().all(|(n, &k)| {
        n == field.argmax || (m.base() == Base::ProjectivePlane && n == twin) || k < field.max_value - 1e-12
    })
}

/// ĝ-barycenter of the left side of a region's oriented boundary.
fn barycenter(m: &ConformalMetric, region: &Region) -> Result<Vec3> {
    let c = oriented_boundary(region)?;
    let g = m.grid();
    let mut b = Vec3::zeros();
    for axis in 0..3 {
        let w: Vec<f64> = (0..g.len()).map(|n| g.position(n)[axis]).collect();
        b[axis] = VolumePotential::for_metric(m, Some(&w)).enclosed(c.vertices());
    }
    if b.norm() == 0.0 {
        return Err(Error::Domain("region barycenter is at the origin".into()));
    }
    Ok(b.normalize())
}

/// Distance from the witness barycenter to the curvature maximum, for
/// decreasing volume fractions.
pub fn small_volume_concentration(m: &ConformalMetric, volumes: &[f64]) -> Result<Concentration> {
    let field = gauss_curvature(m)?;
    if !max_is_unique(m, &field) {
        return Err(Error::Precondition(
            "the curvature maximum is not attained at a single node".into(),
        ));
    }
    let argmax = m.grid().position(field.argmax);
    let sweep = cap_sweep(m, volumes)?;
    let mut entries = Vec::new();
    for &v in volumes {
        let s = sweep
            .sample(v)
            .ok_or_else(|| Error::Bracket(format!("no witness at v = {v}")))?;
        let barycenter = barycenter(m, &s.witness)?;
        let mut distance = geodesic_distance(&barycenter, &argmax);
        if m.base() == Base::ProjectivePlane {
            distance = distance.min(geodesic_distance(&barycenter, &-argmax));
        }
        entries.push(ConcentrationEntry {
            v,
            barycenter,
            distance,
        });
    }
    let non_increasing = entries.windows(2).all(|w| w[1].distance <= 1.1 * w[0].distance);
    Ok(Concentration {
        argmax,
        max_curvature: field.max_value,
        entries,
        non_increasing,
    })
}
