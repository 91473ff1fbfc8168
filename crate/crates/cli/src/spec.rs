//! Metric specification documents.
//!
//! ```json
//! {
//!   "base": "sphere",
//!   "K": 1.0,
//!   "grid": {"n_theta": 256, "n_phi": 512},
//!   "conformal": [
//!     {"type": "harmonic", "l": 2, "m": 0, "coeff": 0.01},
//!     {"type": "bump", "center": [1.0, 0.3], "width": 0.5, "height": 0.05},
//!     {"type": "constant", "value": -0.04}
//!   ]
//! }
//! ```
//!
//! Harmonics use the real orthonormal basis (`cos mφ` for `m > 0`, `sin |m|φ`
//! for `m < 0`, unit L² norm). Bumps are `height · exp(1 − 1/(1 − s²))` with
//! `s` the round distance to `center = [θ, φ]` divided by `width`; with
//! `"profile": "polynomial"` the profile is `(1 − s²)⁴` instead, whose
//! curvature peaks at the center rather than on a ring.
//! Validation runs during deserialization so every error carries a line and
//! column.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use lglab_core::fields::{bump_with, harmonic_field, BumpProfile};
use lglab_core::grid::{spherical_to_cartesian, SphereGrid};
use lglab_core::metric::{Base, ConformalMetric};

/// Angular tolerance when matching a bump with its antipodal partner.
const PAIRING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseName {
    Sphere,
    Rp2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = SphereGrid::standard();
        Self {
            n_theta: g.n_theta(),
            n_phi: g.n_phi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Term {
    Harmonic {
        l: usize,
        m: i64,
        coeff: f64,
    },
    Bump {
        center: [f64; 2],
        width: f64,
        height: f64,
        #[serde(default, skip_serializing_if = "is_mollifier")]
        profile: BumpProfile,
    },
    Constant {
        value: f64,
    },
}

/// A term whose own fields passed validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Term")]
struct CheckedTerm(Term);

impl TryFrom<Term> for CheckedTerm {
    type Error = String;

    fn try_from(t: Term) -> Result<Self, String> {
        match t {
            Term::Harmonic { l, m, coeff } => {
                if m.unsigned_abs() as usize > l {
                    return Err(format!("harmonic order |m| = {} exceeds l = {l}", m.abs()));
                }
                if !coeff.is_finite() {
                    return Err("harmonic coefficient is not finite".into());
                }
            }
            Term::Bump {
                center, width, height, ..
            } => {
                if !(center.iter().all(|x| x.is_finite()) && (0.0..=PI).contains(&center[0])) {
                    return Err("bump center must have θ in [0, π]".into());
                }
                if !(width.is_finite() && width > 0.0 && height.is_finite()) {
                    return Err("bump width must be positive and height finite".into());
                }
            }
            Term::Constant { value } => {
                if !value.is_finite() {
                    return Err("constant is not finite".into());
                }
            }
        }
        Ok(Self(t))
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(try_from = "GridSpec")]
struct CheckedGrid(GridSpec);

impl TryFrom<GridSpec> for CheckedGrid {
    type Error = String;

    fn try_from(g: GridSpec) -> Result<Self, String> {
        SphereGrid::new(g.n_theta, g.n_phi).map_err(|e| e.to_string())?;
        Ok(Self(g))
    }
}

fn positive<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let k = f64::deserialize(d)?;
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(serde::de::Error::custom(format!("K must be a positive real, got {k}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    base: BaseName,
    #[serde(rename = "K", deserialize_with = "positive")]
    k: f64,
    #[serde(default)]
    grid: CheckedGrid,
    #[serde(default)]
    conformal: Vec<CheckedTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSpec {
    pub base: BaseName,
    #[serde(rename = "K")]
    pub k: f64,
    pub grid: GridSpec,
    pub conformal: Vec<Term>,
}

/// Spec error with the 1-based position it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Line and column of the byte before `offset`.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1);
    (line, column.max(1))
}

fn is_mollifier(p: &BumpProfile) -> bool {
    *p == BumpProfile::Mollifier
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d) < PAIRING_TOL
}

impl MetricSpec {
    /// Parse and validate a spec document. Syntax and field errors point at
    /// the offending value; whole-document errors at the end of the document.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut stream = serde_json::Deserializer::from_str(text).into_iter::<RawSpec>();
        let raw = match stream.next() {
            Some(Ok(raw)) => raw,
            Some(Err(e)) => {
                let (line, column) = if e.line() == 0 {
                    position(text, text.len())
                } else {
                    (e.line(), e.column())
                };
                return Err(ParseError {
                    line,
                    column,
                    message: e.to_string(),
                });
            }
            None => {
                return Err(ParseError {
                    line: 1,
                    column: 1,
                    message: "empty document".into(),
                })
            }
        };
        let end = stream.byte_offset();
        if !text[end..].trim().is_empty() {
            let (line, column) = position(text, end + 1);
            return Err(ParseError {
                line,
                column,
                message: "trailing characters after the spec".into(),
            });
        }
        let spec = Self {
            base: raw.base,
            k: raw.k,
            grid: raw.grid.0,
            conformal: raw.conformal.into_iter().map(|t| t.0).collect(),
        };
        spec.validate().map_err(|message| {
            let (line, column) = position(text, end);
            ParseError { line, column, message }
        })?;
        Ok(spec)
    }

    /// Field checks, plus antipodal evenness of every term on `rp2`.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(format!("K must be a positive real, got {}", self.k));
        }
        SphereGrid::new(self.grid.n_theta, self.grid.n_phi).map_err(|e| e.to_string())?;
        let mut bumps = Vec::new();
        for (i, t) in self.conformal.iter().enumerate() {
            CheckedTerm::try_from(t.clone()).map_err(|e| format!("term {i}: {e}"))?;
            match *t {
                Term::Harmonic { l, .. } if self.base == BaseName::Rp2 && l % 2 == 1 => {
                    return Err(format!("term {i}: odd degree l = {l} is not antipodally even"));
                }
                Term::Bump {
                    center,
                    width,
                    height,
                    profile,
                } => bumps.push((i, center, width, height, profile)),
                _ => {}
            }
        }
        if self.base == BaseName::Rp2 {
            let mut used = vec![false; bumps.len()];
            for a in 0..bumps.len() {
                if used[a] {
                    continue;
                }
                let (i, c, w, h, pr) = bumps[a];
                let partner = (0..bumps.len()).find(|&b| {
                    let (_, d, wb, hb, pb) = bumps[b];
                    b != a
                        && !used[b]
                        && (d[0] - (PI - c[0])).abs() < PAIRING_TOL
                        && same_angle(d[1], c[1] + PI)
                        && wb == w
                        && hb == h
                        && pb == pr
                });
                match partner {
                    Some(b) => {
                        used[a] = true;
                        used[b] = true;
                    }
                    None => return Err(format!("term {i}: bump has no antipodal partner of equal shape")),
                }
            }
        }
        Ok(())
    }

    pub fn with_grid(&self, n_theta: usize, n_phi: usize) -> Result<Self, String> {
        let s = Self {
            grid: GridSpec { n_theta, n_phi },
            ..self.clone()
        };
        s.validate()?;
        Ok(s)
    }

    /// Canonical serialization, the input of the report digest.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn build(&self) -> lglab_core::Result<ConformalMetric> {
        let g = SphereGrid::new(self.grid.n_theta, self.grid.n_phi)?;
        let mut u = vec![0.0; g.len()];
        for t in &self.conformal {
            let field = match *t {
                Term::Harmonic { l, m, coeff } => harmonic_field(&g, l, m, coeff),
                Term::Bump {
                    center,
                    width,
                    height,
                    profile,
                } => bump_with(
                    &g,
                    &spherical_to_cartesian(center[0], center[1]),
                    width,
                    height,
                    profile,
                ),
                Term::Constant { value } => vec![value; g.len()],
            };
            u.iter_mut().zip(field).for_each(|(a, b)| *a += b);
        }
        let base = match self.base {
            BaseName::Sphere => Base::Sphere,
            BaseName::Rp2 => Base::ProjectivePlane,
        };
        ConformalMetric::new(base, g, u, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let s = MetricSpec::parse(r#"{"base": "sphere", "K": 1}"#).unwrap();
        assert_eq!(s.grid, GridSpec::default());
        assert!(s.conformal.is_empty());
        assert_eq!(MetricSpec::parse(&s.canonical()).unwrap(), s);
    }

    #[test]
    fn errors_carry_positions() {
        let e = MetricSpec::parse("{\n  \"base\": \"torus\", \"K\": 1}").unwrap_err();
        assert_eq!(e.line, 2);
        let e = MetricSpec::parse(r#"{"base": "sphere", "K": -1}"#).unwrap_err();
        assert!(e.message.contains("positive"));
        assert!(e.line == 1 && e.column >= 25);
        let term = "{\"base\": \"sphere\", \"K\": 1,\n \"conformal\": [\n  {\"type\": \"harmonic\", \"l\": 1, \"m\": 2, \"coeff\": 1}]}";
        let e = MetricSpec::parse(term).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("exceeds"));
        let e = MetricSpec::parse("{\"base\": \"sphere\", \"K\": 1} x").unwrap_err();
        assert!(e.message.contains("trailing"));
    }

    #[test]
    fn rp2_rejects_odd_terms() {
        let odd = r#"{"base": "rp2", "K": 1, "conformal": [{"type": "harmonic", "l": 1, "m": 0, "coeff": 0.1}]}"#;
        assert!(MetricSpec::parse(odd).unwrap_err().message.contains("odd degree"));
        let lone = r#"{"base": "rp2", "K": 1, "conformal": [{"type": "bump", "center": [0.5, 1.0], "width": 0.4, "height": 0.1}]}"#;
        assert!(MetricSpec::parse(lone).unwrap_err().message.contains("partner"));
        let pair = format!(
            r#"{{"base": "rp2", "K": 1, "grid": {{"n_theta": 32, "n_phi": 64}}, "conformal": [
                {{"type": "bump", "center": [0.5, 1.0], "width": 0.4, "height": 0.1}},
                {{"type": "bump", "center": [{}, {}], "width": 0.4, "height": 0.1}}]}}"#,
            PI - 0.5,
            1.0 + PI
        );
        let s = MetricSpec::parse(&pair).unwrap();
        assert!(s.build().is_ok());
    }
}
