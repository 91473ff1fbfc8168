use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::region::{left_fraction, measure, Region, RegionKind};
use crate::curve::{Curve, MAX_EDGE_ANGLE};
use crate::error::{Error, Result};
use crate::metric::ConformalMetric;
use crate::surface::Geometry;

/// An already stationary input within this fraction of the target is returned as is.
pub const STATIONARY_FRACTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Stop once `max |k_ĝ − k̄|` falls below this.
    pub curvature_tol: f64,
    pub max_steps: usize,
    /// Proportional gain on the fraction error.
    pub gain: f64,
    /// Step size as a multiple of the squared shortest ĝ edge.
    pub cfl: f64,
    /// Steps between self-intersection checks.
    pub check_every: usize,
    /// Resample when the longest round edge exceeds this multiple of the shortest.
    pub max_edge_ratio: f64,
    /// Terminal fraction tolerance of the offset re-solve.
    pub fraction_tol: f64,
    /// The flow starts on a curve resampled down to about this many vertices
    /// and doubles back to the input resolution.
    pub coarsest_vertices: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            curvature_tol: 1e-3,
            max_steps: 100_000,
            gain: 1.0,
            cfl: 0.25,
            check_every: 200,
            max_edge_ratio: 1.5,
            fraction_tol: 1e-10,
            coarsest_vertices: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub region: Region,
    pub converged: bool,
    /// The boundary crossed itself; `region` is the input.
    pub self_intersection: bool,
    /// The flow did not lower the area; `region` is the input.
    pub kept_input: bool,
    pub steps: usize,
    pub input_area: f64,
    pub area: f64,
    /// Final `max |k_ĝ − k̄|` of the flowed curve.
    pub curvature_deviation: f64,
    pub mean_curvature: f64,
}

/// Constant-curvature refinement of a curve-bounded region at fraction `v`.
pub fn curve_flow_refine(m: &ConformalMetric, r: &Region, v: f64) -> Result<FlowOutcome> {
    refine_with(&Geometry::new(m), r, v, &FlowOptions::default())
}

pub fn refine_with(geo: &Geometry, r: &Region, v: f64, opts: &FlowOptions) -> Result<FlowOutcome> {
    let boundary = match (&r.kind, &r.boundary) {
        (RegionKind::GridIndicator { .. }, _) | (_, None) => {
            return Err(Error::Precondition("the flow needs a single boundary curve".into()))
        }
        (_, Some(c)) => c,
    };
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!("volume fraction {v} outside (0, 1)")));
    }
    if (r.volume_fraction - v).abs() > 1e-2 {
        return Err(Error::Precondition(format!(
            "region fraction {:.6} is not within 1e-2 of the target {v}",
            r.volume_fraction
        )));
    }
    // flow the left side; complements are the same curve at the dual fraction
    let target = if r.complement { 1.0 - v } else { v };
    let input_area = measure(geo, r)?.1;
    let on_target = (r.volume_fraction - v).abs() < STATIONARY_FRACTION_TOL;
    let run = flow_left(geo, boundary, target, on_target, opts)?;
    let keep = |flag_si: bool, flag_keep: bool| FlowOutcome {
        region: r.clone(),
        converged: run.converged && !flag_si,
        self_intersection: flag_si,
        kept_input: flag_keep,
        steps: run.steps,
        input_area,
        area: input_area,
        curvature_deviation: run.deviation,
        mean_curvature: run.mean,
    };
    if run.self_intersection {
        warn!("boundary crossed itself after {} steps; keeping the input", run.steps);
        return Ok(keep(true, false));
    }
    let Some(curve) = run.curve else {
        return Ok(keep(false, false));
    };
    let mut region = Region {
        kind: RegionKind::Polygon,
        boundary: Some(curve),
        complement: r.complement,
        volume_fraction: f64::NAN,
    };
    let (fraction, area) = measure(geo, &region)?;
    region.volume_fraction = fraction;
    if area > input_area + 1e-9 {
        debug!("flow raised the area from {input_area} to {area}; keeping the input");
        return Ok(keep(false, true));
    }
    Ok(FlowOutcome {
        region,
        converged: run.converged,
        self_intersection: false,
        kept_input: false,
        steps: run.steps,
        input_area,
        area,
        curvature_deviation: run.deviation,
        mean_curvature: run.mean,
    })
}

struct FlowRun {
    /// `None` when the input was already stationary at the right fraction.
    curve: Option<Curve>,
    converged: bool,
    self_intersection: bool,
    steps: usize,
    deviation: f64,
    mean: f64,
}

/// Resolutions visited by the flow: halvings of `n` down to `coarsest`.
fn schedule(n: usize, coarsest: usize) -> Vec<usize> {
    let mut sizes = vec![n];
    let mut m = n;
    while m.is_multiple_of(2) && m / 2 >= coarsest.max(16) {
        m /= 2;
        sizes.push(m);
    }
    sizes.reverse();
    sizes
}

fn flow_left(geo: &Geometry, input: &Curve, target: f64, on_target: bool, opts: &FlowOptions) -> Result<FlowRun> {
    let n = input.len();
    let (mean, deviation) = stats(geo, input);
    if deviation < opts.curvature_tol && on_target {
        return Ok(FlowRun {
            curve: None,
            converged: true,
            self_intersection: false,
            steps: 0,
            deviation,
            mean,
        });
    }
    let sizes = schedule(n, opts.coarsest_vertices);
    let mut c = if sizes[0] == n {
        input.clone()
    } else {
        input.resampled(sizes[0])?
    };
    let mut steps = 0;
    let mut last = Relaxed {
        converged: deviation < opts.curvature_tol,
        crossed: false,
        deviation,
        mean,
    };
    for (level, &size) in sizes.iter().enumerate() {
        while c.len() < size {
            c = c.subdivided()?;
        }
        let budget = if level + 1 == sizes.len() {
            opts.max_steps - steps
        } else {
            (opts.max_steps - steps) / 2
        };
        last = relax(geo, &mut c, target, budget, &mut steps, opts)?;
        debug!(
            "flow level {size}: {steps} steps, deviation {:.3e}, converged {}",
            last.deviation, last.converged
        );
        if last.crossed {
            break;
        }
    }
    if last.crossed || c.self_intersects() {
        return Ok(FlowRun {
            curve: None,
            converged: false,
            self_intersection: true,
            steps,
            deviation: last.deviation,
            mean: last.mean,
        });
    }
    let c = fix_fraction(geo, &c, target, opts.fraction_tol)?;
    Ok(FlowRun {
        curve: Some(c),
        converged: last.converged,
        self_intersection: false,
        steps,
        deviation: last.deviation,
        mean: last.mean,
    })
}

fn stats(geo: &Geometry, c: &Curve) -> (f64, f64) {
    let sample = geo.sample_curve(c);
    let (turning, normals) = c.frame();
    curvature_stats(&sample.curvature(&turning, &normals), &sample.vertex_weights())
}

fn curvature_stats(k: &[f64], w: &[f64]) -> (f64, f64) {
    let mean = k.iter().zip(w).map(|(k, w)| k * w).sum::<f64>() / w.iter().sum::<f64>();
    let deviation = k.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
    (mean, deviation)
}

struct Relaxed {
    converged: bool,
    crossed: bool,
    deviation: f64,
    mean: f64,
}

/// Explicit steps of the volume-controlled flow at the resolution of `c`.
fn relax(
    geo: &Geometry,
    c: &mut Curve,
    target: f64,
    budget: usize,
    steps: &mut usize,
    opts: &FlowOptions,
) -> Result<Relaxed> {
    let total = geo.total_volume();
    let n = c.len();
    let mut taken = 0;
    loop {
        let mut sample = geo.sample_curve(c);
        let (lo, hi) = edge_range(&sample.edges);
        if lo == 0.0 || hi >= MAX_EDGE_ANGLE {
            return Err(Error::Resolution(format!(
                "flow degenerated the boundary after {steps} steps"
            )));
        }
        if hi > opts.max_edge_ratio * lo {
            *c = c.resampled(n)?;
            sample = geo.sample_curve(c);
        }
        let (turning, normals) = c.frame();
        let k = sample.curvature(&turning, &normals);
        let (mean, deviation) = curvature_stats(&k, &sample.vertex_weights());
        let done = |converged, crossed| Relaxed {
            converged,
            crossed,
            deviation,
            mean,
        };
        if deviation < opts.curvature_tol {
            return Ok(done(true, false));
        }
        if taken >= budget {
            return Ok(done(false, false));
        }
        if taken % opts.check_every == 0 && c.self_intersects() {
            return Ok(done(false, true));
        }
        let elements = sample.edge_elements();
        let length: f64 = elements.iter().sum();
        let h = elements.iter().copied().fold(f64::INFINITY, f64::min);
        let dt = opts.cfl * h * h;
        let err = sample.enclosed / total - target;
        let push = opts.gain * err * total / length;
        let offsets: Vec<f64> = k
            .iter()
            .zip(&sample.u)
            .map(|(k, u)| (dt * (k - mean) + push) * (-u).exp())
            .collect();
        *c = c.displaced_unchecked(&normals, &offsets);
        taken += 1;
        *steps += 1;
    }
}

fn edge_range(edges: &[f64]) -> (f64, f64) {
    edges
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)))
}

/// Move `c` by a uniform ĝ-distance along its normals until the left side has
/// fraction `target` (bracketing, then regula falsi).
pub(crate) fn fix_fraction(geo: &Geometry, c: &Curve, target: f64, tol: f64) -> Result<Curve> {
    let normals = c.inner_normals();
    let scale: Vec<f64> = c.vertices().iter().map(|p| (-geo.u_at(p)).exp()).collect();
    let total = geo.total_volume();
    let shifted = |d: f64| -> Result<(f64, Curve)> {
        let offsets: Vec<f64> = scale.iter().map(|s| d * s).collect();
        let moved = c.displaced(&normals, &offsets)?;
        Ok((left_fraction(geo, &moved) - target, moved))
    };
    let (e0, c0) = (left_fraction(geo, c) - target, c.clone());
    if e0.abs() < tol {
        return Ok(c0);
    }
    // moving inward (d > 0) shrinks the left side
    let step = e0 * total / geo.length(c);
    let (mut a, mut fa) = (0.0, e0);
    let (mut b, mut fb) = (step, shifted(step)?.0);
    let mut grow = 0;
    while fa * fb > 0.0 {
        grow += 1;
        if grow > 40 {
            return Err(Error::Bracket("no normal offset brackets the target fraction".into()));
        }
        a = b;
        fa = fb;
        b *= 2.0;
        fb = shifted(b)?.0;
    }
    let mut side = 0;
    for _ in 0..200 {
        let d = (a * fb - b * fa) / (fb - fa);
        let (fd, moved) = shifted(d)?;
        if fd.abs() < tol {
            return Ok(moved);
        }
        if fd * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            fa *= if side == 1 { 0.5 } else { 1.0 };
            side = 1;
        }
        b = d;
        fb = fd;
    }
    Err(Error::Bracket("normal offset re-solve did not converge".into()))
}
