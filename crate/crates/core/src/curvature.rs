//! Differential operators on the lat-long grid and the Gauss curvature of
//! `e^{2u}g₀`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{tangent_basis, SphereGrid, MIN_N_THETA};
use crate::metric::ConformalMetric;
use crate::Vec3;

/// Round-sphere Laplace–Beltrami operator,
/// `∂²_θ f + cotθ ∂_θ f + (1/sin²θ)∂²_φ f`, with fourth-order central differences.
///
/// Rows beyond a pole are read through the across-pole identification. A
/// second-order stencil loses an order at the polar rows for non-axisymmetric
/// modes (the `cotθ` and `1/sin²θ` factors amplify the truncation error by
/// `1/h`); the wider stencil keeps the whole grid at `O(h²)` or better.
pub fn laplace_beltrami(grid: &SphereGrid, f: &[f64]) -> Result<Vec<f64>> {
    if grid.n_theta() < MIN_N_THETA {
        return Err(Error::Resolution(format!(
            "n_theta = {} is below {MIN_N_THETA}",
            grid.n_theta()
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::Domain("field length does not match grid".into()));
    }
    let np = grid.n_phi();
    let ht = grid.d_theta();
    let hp = grid.d_phi();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
        let theta = grid.theta(i);
        let (s, c) = theta.sin_cos();
        let ii = i as isize;
        for (j, out) in row.iter_mut().enumerate() {
            let jj = j as isize;
            let at = |di: isize, dj: isize| f[grid.wrap(ii + di, jj + dj)];
            let f0 = at(0, 0);
            let (n1, n2, s1, s2) = (at(-1, 0), at(-2, 0), at(1, 0), at(2, 0));
            let (w1, w2, e1, e2) = (at(0, -1), at(0, -2), at(0, 1), at(0, 2));
            let f_tt = (-s2 + 16.0 * s1 - 30.0 * f0 + 16.0 * n1 - n2) / (12.0 * ht * ht);
            let f_t = (-s2 + 8.0 * s1 - 8.0 * n1 + n2) / (12.0 * ht);
            let f_pp = (-e2 + 16.0 * e1 - 30.0 * f0 + 16.0 * w1 - w2) / (12.0 * hp * hp);
            *out = f_tt + c / s * f_t + f_pp / (s * s);
        }
    });
    Ok(out)
}

/// Round-metric gradient of a nodal field as an ambient 3-vector per node.
pub fn gradient(grid: &SphereGrid, f: &[f64]) -> Vec<Vec3> {
    let np = grid.n_phi();
    let ht = grid.d_theta();
    let hp = grid.d_phi();
    (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let (i, j) = (n / np, n % np);
            let (ii, jj) = (i as isize, j as isize);
            let at = |di: isize, dj: isize| f[grid.wrap(ii + di, jj + dj)];
            let theta = grid.theta(i);
            let d_theta = (-at(2, 0) + 8.0 * at(1, 0) - 8.0 * at(-1, 0) + at(-2, 0)) / (12.0 * ht);
            let d_phi = (-at(0, 2) + 8.0 * at(0, 1) - 8.0 * at(0, -1) + at(0, -2)) / (12.0 * hp);
            let (e_theta, e_phi) = tangent_basis(theta, grid.phi(j));
            e_theta * d_theta + e_phi * (d_phi / theta.sin())
        })
        .collect()
}

/// Gauss curvature of a conformal metric with its extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub min_value: f64,
    pub argmin: usize,
    pub max_value: f64,
    pub argmax: usize,
}

impl CurvatureField {
    pub fn from_values(values: Vec<f64>) -> Self {
        let (mut argmin, mut argmax) = (0, 0);
        for (n, &k) in values.iter().enumerate() {
            // strict comparisons keep the lowest index on ties
            if k < values[argmin] {
                argmin = n;
            }
            if k > values[argmax] {
                argmax = n;
            }
        }
        Self {
            min_value: values[argmin],
            max_value: values[argmax],
            argmin,
            argmax,
            values,
        }
    }

    /// Whether the maximum is attained at a single node.
    pub fn max_is_unique(&self, tol: f64) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(n, &k)| n == self.argmax || k < self.max_value - tol)
    }
}

/// `K = e^{−2u}(1 − Δ₀u)` on the unit round base.
pub fn gauss_curvature(m: &ConformalMetric) -> Result<CurvatureField> {
    let lap = laplace_beltrami(m.grid(), m.u())?;
    let values = m
        .u()
        .iter()
        .zip(&lap)
        .map(|(u, l)| (-2.0 * u).exp() * (1.0 - l))
        .collect();
    Ok(CurvatureField::from_values(values))
}
