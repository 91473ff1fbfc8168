//! The five experiment commands.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lglab_core::isoperimetry::{
    check_levy_gromov_with, model_profile, profile, FlowOptions, APERTURE_TOL, CENTER_STRIDE, HYPOTHESIS_TOL,
    MARGIN_TOL,
};
use lglab_core::metric::ConformalMetric;
use lglab_core::quotient::{factor_relation_check, IDENTITY_TOL};
use lglab_core::rigidity::{revalidate, rigidity_probe, Conclusion, ADMISSIBLE_TOL, MAX_PROBE_POINTS, SLACK_THRESHOLD};
use lglab_core::variation::{
    build_descent_perturbation, build_descent_perturbation_auto, descent_slope, oriented_boundary, NormalField,
    CORRECTION_TOL,
};
use lglab_core::{Error, Vec3};

use crate::output::{csv_table, sha256_hex, RunReport};
use crate::spec::MetricSpec;
use crate::Failure;

/// Radius of the descent perturbation and displacement field used by `variation`.
pub const VARIATION_RADIUS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Metric specification (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Volume fractions as `a:b:step` or a single value.
    #[arg(long, value_parser = parse_volumes)]
    pub volumes: Option<Volumes>,
    /// Volume fraction for `variation`.
    #[arg(long)]
    pub v: Option<f64>,
    /// Refine sweep witnesses with the constant-curvature flow.
    #[arg(long, value_enum, default_value = "on")]
    pub refine: Switch,
    /// Grid override `NxM` (n_theta x n_phi).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Output file (written atomically); standard output otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the JSON run report instead of the CSV table.
    #[arg(long)]
    pub json: bool,
    /// Include wall-clock timings in the JSON report (breaks byte equality).
    #[arg(long)]
    pub timings: bool,
    /// Boundary points probed per volume by `rigidity`.
    #[arg(long, default_value_t = MAX_PROBE_POINTS)]
    pub points: usize,
    /// File receiving the descent witness found by `rigidity`.
    #[arg(long)]
    pub witness: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Isoperimetric profile table.
    Profile(Common),
    /// Compare the profile with the model sphere.
    CheckLg(Common),
    /// Descent slope of the conformal perturbation at one witness.
    Variation(Common),
    /// Search for admissible conformal descent.
    Rigidity(Common),
    /// Double-cover identities on the projective plane.
    Rp2(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Profile(c)
            | Command::CheckLg(c)
            | Command::Variation(c)
            | Command::Rigidity(c)
            | Command::Rp2(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::CheckLg(_) => "check-lg",
            Command::Variation(_) => "variation",
            Command::Rigidity(_) => "rigidity",
            Command::Rp2(_) => "rp2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volumes(pub Vec<f64>);

/// `a:b:step` with both ends included, or a single fraction.
pub fn parse_volumes(s: &str) -> Result<Volumes, String> {
    let nums: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let out = match nums[..] {
        [v] => vec![v],
        [a, b, step] => {
            if !(step > 0.0) || b < a {
                return Err("expected a ≤ b and step > 0".into());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()
        }
        _ => return Err("expected `a:b:step` or a single value".into()),
    };
    if let Some(v) = out.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(format!("volume fraction {v} outside (0, 1)"));
    }
    Ok(Volumes(out))
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected NxM")?;
    let n = a.trim().parse().map_err(|e| format!("{e}"))?;
    let m = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((n, m))
}

/// Exit code of a core error: refusals 3, failed property checks 4.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) => 4,
        Error::Symmetry(_) => 2,
        _ => 3,
    }
}

fn refusal(e: Error) -> Failure {
    Failure {
        code: error_code(&e),
        message: e.to_string(),
    }
}

/// Numeric settings in effect, embedded in every report.
fn tolerances() -> BTreeMap<String, f64> {
    let f = FlowOptions::default();
    [
        ("aperture_tol", APERTURE_TOL),
        ("center_stride", CENTER_STRIDE as f64),
        ("hypothesis_tol", HYPOTHESIS_TOL),
        ("margin_tol", MARGIN_TOL),
        ("flow_curvature_tol", f.curvature_tol),
        ("flow_fraction_tol", f.fraction_tol),
        ("flow_max_steps", f.max_steps as f64),
        ("flow_cfl", f.cfl),
        ("correction_tol", CORRECTION_TOL),
        ("admissible_tol", ADMISSIBLE_TOL),
        ("slack_threshold", SLACK_THRESHOLD),
        ("identity_tol", IDENTITY_TOL),
        ("variation_radius", VARIATION_RADIUS),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// What a command produced: CSV text, JSON results, verdict and exit code.
pub struct Outcome {
    pub table: String,
    pub results: Value,
    pub verdict: String,
    pub code: i32,
    /// Extra JSON document for `--witness`.
    pub witness: Option<Value>,
}

fn point(p: &Vec3) -> Value {
    json!([p.x, p.y, p.z])
}

fn volumes_or(c: &Common, default: &[f64]) -> Vec<f64> {
    c.volumes.as_ref().map_or_else(|| default.to_vec(), |v| v.0.clone())
}

const DEFAULT_VOLUMES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn cmd_profile(m: &ConformalMetric, c: &Common) -> Result<Outcome, Failure> {
    let volumes = volumes_or(c, &DEFAULT_VOLUMES);
    let p = profile(m, &volumes, c.refine == Switch::On).map_err(refusal)?;
    let rows = p
        .samples
        .iter()
        .map(|s| {
            let model = model_profile(s.v, m.k());
            vec![
                s.v.into(),
                s.area.into(),
                s.normalized.into(),
                model.into(),
                (s.normalized - model).into(),
                s.witness.kind_name().into(),
                s.refined.into(),
            ]
        })
        .collect();
    let table = csv_table(
        &[
            "v",
            "area",
            "normalized",
            "model_value",
            "margin",
            "witness_kind",
            "refined",
        ],
        rows,
    );
    let samples: Vec<Value> = p
        .samples
        .iter()
        .map(|s| {
            json!({
                "v": s.v,
                "area": s.area,
                "normalized": s.normalized,
                "model_value": model_profile(s.v, m.k()),
                "witness_kind": s.witness.kind_name(),
                "refined": s.refined,
            })
        })
        .collect();
    let failures: Vec<Value> = p
        .failures
        .iter()
        .map(|f| json!({"v": f.v, "reason": f.reason}))
        .collect();
    let ok = p.failures.is_empty();
    Ok(Outcome {
        table,
        results: json!({"total_volume": p.total_volume, "samples": samples, "failures": failures}),
        verdict: if ok { "OK".into() } else { "INCOMPLETE".into() },
        code: if ok { 0 } else { 3 },
        witness: None,
    })
}

fn cmd_check_lg(m: &ConformalMetric, c: &Common) -> Result<Outcome, Failure> {
    let volumes = volumes_or(c, &DEFAULT_VOLUMES);
    let r = check_levy_gromov_with(m, &volumes, c.refine == Switch::On).map_err(refusal)?;
    let rows = r
        .entries
        .iter()
        .map(|e| {
            vec![
                e.v.into(),
                e.value.into(),
                e.model.into(),
                e.margin.into(),
                e.witness_kind.as_str().into(),
                e.refined.into(),
            ]
        })
        .collect();
    let table = csv_table(
        &["v", "value", "model_value", "margin", "witness_kind", "refined"],
        rows,
    );
    Ok(Outcome {
        table,
        results: serde_json::to_value(&r).expect("serializable"),
        verdict: if r.holds { "PASS".into() } else { "FAIL".into() },
        code: if r.holds { 0 } else { 4 },
        witness: None,
    })
}

fn cmd_variation(m: &ConformalMetric, c: &Common) -> Result<Outcome, Failure> {
    let v = c.v.unwrap_or(0.5);
    if !(v > 0.0 && v < 1.0) {
        return Err(Failure {
            code: 2,
            message: format!("--v {v} outside (0, 1)"),
        });
    }
    let p = profile(m, &[v], c.refine == Switch::On).map_err(refusal)?;
    let s = p
        .samples
        .first()
        .ok_or_else(|| refusal(Error::Bracket(format!("no witness at v = {v}"))))?;
    let region = &s.witness;
    let x = oriented_boundary(region).map_err(refusal)?.vertices()[0];
    let d = match build_descent_perturbation(m, region, &x, VARIATION_RADIUS) {
        Err(Error::Support(_)) => build_descent_perturbation_auto(m, region, &x),
        other => other,
    }
    .map_err(refusal)?;
    let nf = NormalField::new(m, region, &d.support_center, VARIATION_RADIUS).map_err(refusal)?;
    let r = descent_slope(m, region, &d.u, &nf, v).map_err(refusal)?;
    let table = csv_table(
        &[
            "v",
            "measured_slope",
            "bound",
            "meets_bound",
            "correction_exponent",
            "dv_dt",
            "dv_dt_fd",
            "da_dt",
            "da_dt_fd",
            "lambda",
        ],
        vec![vec![
            v.into(),
            r.measured_slope.into(),
            r.bound.into(),
            r.meets_bound.into(),
            r.correction.exponent.unwrap_or(f64::NAN).into(),
            r.conformal.dv_dt.into(),
            r.conformal.dv_dt_fd.into(),
            r.conformal.da_dt.into(),
            r.conformal.da_dt_fd.into(),
            r.flow.lambda.into(),
        ]],
    );
    let results = json!({
        "v": v,
        "witness_kind": region.kind_name(),
        "probe_point": point(&x),
        "support_radius": d.support_radius,
        "constraint_residuals": d.constraint_residuals,
        "coefficients": d.coefficients,
        "conformal": r.conformal,
        "flow": r.flow,
        "correction": r.correction,
        "transported": r.transported,
        "measured_slope": r.measured_slope,
        "bound": r.bound,
        "meets_bound": r.meets_bound,
    });
    Ok(Outcome {
        table,
        results,
        verdict: if r.meets_bound {
            "MEETS_BOUND".into()
        } else {
            "ABOVE_BOUND".into()
        },
        code: if r.meets_bound { 0 } else { 4 },
        witness: None,
    })
}

fn cmd_rigidity(m: &ConformalMetric, c: &Common) -> Result<Outcome, Failure> {
    let volumes = volumes_or(c, &[0.3]);
    let r = rigidity_probe(m, &volumes, c.points).map_err(refusal)?;
    let rows = r
        .probed_points
        .iter()
        .map(|p| {
            vec![
                p.v.into(),
                p.point.x.into(),
                p.point.y.into(),
                p.point.z.into(),
                p.slack.into(),
                p.note.as_str().into(),
            ]
        })
        .collect();
    let table = csv_table(&["v", "x", "y", "z", "slack", "note"], rows);
    let mut code = 0;
    let mut witness = None;
    if let Some(w) = &r.descent_witness {
        let (cert, slope) = revalidate(m, w).map_err(refusal)?;
        let valid = cert.is_admissible() && slope < 0.0;
        if !valid {
            code = 4;
        }
        witness = Some(json!({
            "v": w.v,
            "region": w.region,
            "support_center": point(&w.perturbation.support_center),
            "support_radius": w.perturbation.support_radius,
            "constraint_residuals": w.perturbation.constraint_residuals,
            "coefficients": w.perturbation.coefficients,
            "normal_field_radius": w.normal_field.support_radius,
            "t_star": w.t_star,
            "certificate": w.certificate,
            "slope": w.slope,
            "revalidated": {"certificate": cert, "slope": slope, "valid": valid},
        }));
    }
    let points: Vec<Value> = r
        .probed_points
        .iter()
        .map(|p| json!({"v": p.v, "point": point(&p.point), "slack": p.slack, "note": p.note}))
        .collect();
    let conclusion = match r.conclusion {
        Conclusion::NoAdmissibleDescentFound => "NoAdmissibleDescentFound",
        Conclusion::NotCritical => "NotCritical",
    };
    Ok(Outcome {
        table,
        results: json!({
            "volumes": volumes,
            "probed_points": points,
            "descent_found": r.descent_found,
            "conclusion": conclusion,
            "descent_witness": witness.clone().unwrap_or(Value::Null),
        }),
        verdict: conclusion.into(),
        code,
        witness,
    })
}

fn cmd_rp2(m: &ConformalMetric, c: &Common) -> Result<Outcome, Failure> {
    let volumes = volumes_or(c, &[0.1, 0.2, 0.3, 0.4, 0.5]);
    let r = factor_relation_check(m, &volumes).map_err(refusal)?;
    let rows = r
        .entries
        .iter()
        .map(|e| {
            vec![
                e.v.into(),
                e.upstairs.into(),
                e.downstairs.into(),
                e.ratio.into(),
                e.separation.into(),
            ]
        })
        .collect();
    let table = csv_table(&["v", "upstairs", "downstairs", "ratio", "separation"], rows);
    Ok(Outcome {
        table,
        results: serde_json::to_value(&r).expect("serializable"),
        verdict: if r.holds { "HOLDS".into() } else { "FAILS".into() },
        code: if r.holds { 0 } else { 4 },
        witness: None,
    })
}

/// Parse the spec, run the command and assemble the report.
pub fn run(cmd: &Command) -> Result<(RunReport, Outcome), Failure> {
    let c = cmd.common();
    let text = std::fs::read_to_string(&c.spec).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", c.spec.display()),
    })?;
    let mut spec = MetricSpec::parse(&text).map_err(|e| Failure {
        code: 2,
        message: format!("{}:{e}", c.spec.display()),
    })?;
    if let Some((n, m)) = c.grid {
        spec = spec.with_grid(n, m).map_err(|e| Failure {
            code: 2,
            message: format!("--grid: {e}"),
        })?;
    }
    let metric = spec.build().map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", c.spec.display()),
    })?;
    let start = Instant::now();
    let outcome = match cmd {
        Command::Profile(c) => cmd_profile(&metric, c),
        Command::CheckLg(c) => cmd_check_lg(&metric, c),
        Command::Variation(c) => cmd_variation(&metric, c),
        Command::Rigidity(c) => cmd_rigidity(&metric, c),
        Command::Rp2(c) => cmd_rp2(&metric, c),
    }?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let canonical = spec.canonical();
    let mut options = BTreeMap::new();
    options.insert("refine".into(), json!(c.refine == Switch::On));
    if let Some(v) = &c.volumes {
        options.insert("volumes".into(), json!(v.0));
    }
    if let Some(v) = c.v {
        options.insert("v".into(), json!(v));
    }
    if matches!(cmd, Command::Rigidity(_)) {
        options.insert("points".into(), json!(c.points));
    }
    let report = RunReport {
        tool: "lglab",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name().into(),
        spec_digest: sha256_hex(&canonical),
        spec: serde_json::from_str(&canonical).expect("canonical spec is JSON"),
        options,
        tolerances: tolerances(),
        verdict: outcome.verdict.clone(),
        exit_code: outcome.code,
        results: outcome.results.clone(),
        timings_ms: c.timings.then(|| BTreeMap::from([("total".to_string(), elapsed)])),
    };
    Ok((report, outcome))
}
