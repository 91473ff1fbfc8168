//! Scalar fields used to build conformal factors and test perturbations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{geodesic_distance, SphereGrid};
use crate::Vec3;

/// Smooth compactly supported profile `exp(1 − 1/(1 − s²))` on `|s| < 1`,
/// normalised to 1 at `s = 0`.
pub fn mollifier(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// `height · mollifier(d(x, center)/radius)` with `d` the round geodesic distance.
pub fn bump(grid: &SphereGrid, center: &Vec3, radius: f64, height: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|n| height * mollifier(geodesic_distance(&grid.position(n), center) / radius))
        .collect()
}

/// Radial profile of a bump term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpProfile {
    /// [`mollifier`]; its Laplacian is most negative on a ring, so the
    /// curvature of a mollifier bump peaks away from the center.
    #[default]
    Mollifier,
    /// `(1 − s²)⁴` on `|s| < 1` (C³); Laplacian and curvature peak at the center.
    Polynomial,
}

impl BumpProfile {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            BumpProfile::Mollifier => mollifier(s),
            BumpProfile::Polynomial => {
                let q = 1.0 - s * s;
                if q <= 0.0 {
                    0.0
                } else {
                    q.powi(4)
                }
            }
        }
    }
}

/// `height · profile(d(x, center)/radius)`.
pub fn bump_with(grid: &SphereGrid, center: &Vec3, radius: f64, height: f64, profile: BumpProfile) -> Vec<f64> {
    (0..grid.len())
        .map(|n| height * profile.eval(geodesic_distance(&grid.position(n), center) / radius))
        .collect()
}

fn factorial_ratio(l: usize, m: usize) -> f64 {
    // (l − m)! / (l + m)!
    ((l - m + 1)..=(l + m)).fold(1.0, |acc, k| acc / k as f64)
}

/// Associated Legendre function `P_l^m(x)` without the Condon–Shortley phase.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l);
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Real orthonormal spherical harmonic: `cos(mφ)` for `m > 0`, `sin(|m|φ)` for
/// `m < 0`, unit L² norm on the unit sphere.
pub fn real_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial_ratio(l, am)).sqrt();
    let p = assoc_legendre(l, am, theta.cos());
    match m {
        0 => norm * p,
        m if m > 0 => std::f64::consts::SQRT_2 * norm * p * (am as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * norm * p * (am as f64 * phi).sin(),
    }
}

pub fn harmonic_field(grid: &SphereGrid, l: usize, m: i64, coeff: f64) -> Vec<f64> {
    grid.sample(|t, p| coeff * real_harmonic(l, m, t, p))
}
