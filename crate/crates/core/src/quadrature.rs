//! Volume quadrature.
//!
//! Densities are reconstructed piecewise-linearly in θ along each longitude
//! column (through the pole via the ghost convention) and linearly in φ
//! between columns; the reconstruction is integrated exactly against
//! `sinθ dθ dφ`. Regions bounded by a closed polyline are integrated with the
//! column potential `F(θ, φ) = ∫₀^θ ρ sinθ' dθ'` and Green's theorem,
//! `∫_Ω ρ dA = ∮ F dφ`, so a region volume costs one pass over its vertices
//! and varies smoothly with them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::grid::{cartesian_to_spherical, SphereGrid};
use crate::metric::ConformalMetric;
use crate::Vec3;

/// `∫_α^β L(θ) sinθ dθ` for `L` linear through `(ta, fa)` with slope `slope`.
#[inline]
fn linear_sin_integral(fa: f64, ta: f64, slope: f64, alpha: f64, beta: f64) -> f64 {
    let la = fa + slope * (alpha - ta);
    let lb = fa + slope * (beta - ta);
    la * alpha.cos() - lb * beta.cos() + slope * (beta.sin() - alpha.sin())
}

/// Cumulative column integrals of a nodal density.
#[derive(Debug, Clone)]
pub struct VolumePotential {
    grid: SphereGrid,
    density: Vec<f64>,
    /// `∫₀^{θ_i} ρ sinθ dθ` in column `j`, stored at node `(i, j)`.
    cumulative: Vec<f64>,
    /// `∫₀^π ρ sinθ dθ` per column.
    column_totals: Vec<f64>,
    total: f64,
}

impl VolumePotential {
    pub fn new(grid: SphereGrid, density: Vec<f64>) -> Self {
        assert_eq!(density.len(), grid.len(), "density length does not match grid");
        let nt = grid.n_theta();
        let np = grid.n_phi();
        let h = grid.d_theta();
        let columns: Vec<(Vec<f64>, f64)> = (0..np)
            .into_par_iter()
            .map(|j| {
                let jj = j as isize;
                let at = |i: isize| density[grid.wrap(i, jj)];
                let mut cum = Vec::with_capacity(nt);
                let t0 = grid.theta(0);
                let ghost = at(-1);
                let mut acc = linear_sin_integral(ghost, -t0, (at(0) - ghost) / h, 0.0, t0);
                cum.push(acc);
                for i in 0..nt - 1 {
                    let (ta, tb) = (grid.theta(i), grid.theta(i + 1));
                    let fa = at(i as isize);
                    acc += linear_sin_integral(fa, ta, (at(i as isize + 1) - fa) / h, ta, tb);
                    cum.push(acc);
                }
                let ta = grid.theta(nt - 1);
                let fa = at(nt as isize - 1);
                acc += linear_sin_integral(fa, ta, (at(nt as isize) - fa) / h, ta, PI);
                (cum, acc)
            })
            .collect();
        let mut cumulative = vec![0.0; grid.len()];
        let mut column_totals = Vec::with_capacity(np);
        for (j, (cum, tot)) in columns.into_iter().enumerate() {
            for (i, c) in cum.into_iter().enumerate() {
                cumulative[grid.index(i, j)] = c;
            }
            column_totals.push(tot);
        }
        let total = column_totals.iter().sum::<f64>() * grid.d_phi();
        Self {
            grid,
            density,
            cumulative,
            column_totals,
            total,
        }
    }

    /// Potential of `weight · e^{2u}` (the Riemannian volume density of `m`).
    pub fn for_metric(m: &ConformalMetric, weight: Option<&[f64]>) -> Self {
        let density = match weight {
            Some(w) => m.u().iter().zip(w).map(|(u, w)| w * (2.0 * u).exp()).collect(),
            None => m.u().iter().map(|u| (2.0 * u).exp()).collect(),
        };
        Self::new(*m.grid(), density)
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    /// Integral of the density over the whole sphere.
    pub fn total(&self) -> f64 {
        self.total
    }

    fn column(&self, j: usize, theta: f64) -> f64 {
        let g = &self.grid;
        let nt = g.n_theta();
        let h = g.d_theta();
        let jj = j as isize;
        let at = |i: isize| self.density[g.wrap(i, jj)];
        let x = theta / h - 0.5;
        if x < 0.0 {
            let ghost = at(-1);
            let t0 = g.theta(0);
            return linear_sin_integral(ghost, -t0, (at(0) - ghost) / h, 0.0, theta);
        }
        let i = (x.floor() as usize).min(nt - 1);
        let ta = g.theta(i);
        let fa = at(i as isize);
        self.cumulative[g.index(i, j)] + linear_sin_integral(fa, ta, (at(i as isize + 1) - fa) / h, ta, theta)
    }

    /// `F(θ, φ)`.
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        let np = self.grid.n_phi();
        let y = phi.rem_euclid(2.0 * PI) / self.grid.d_phi();
        let j0 = y.floor();
        let b = y - j0;
        let j0 = (j0 as usize) % np;
        let j1 = (j0 + 1) % np;
        (1.0 - b) * self.column(j0, theta) + b * self.column(j1, theta)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn column_total(&self, j: usize) -> f64 {
        self.column_totals[j]
    }

    /// Integral of the density over the region to the left of a closed
    /// polyline of great-circle arcs on the unit sphere.
    ///
    /// On each edge the potential is split as `ρ_e(1 − cosθ) + R` with `ρ_e`
    /// the density at the edge midpoint; the first part integrates exactly
    /// (signed area of the spherical triangle north pole, a, b) and the
    /// remainder, nearly flat in θ along the edge, by the trapezoid rule.
    pub fn enclosed(&self, vertices: &[Vec3]) -> f64 {
        let n = vertices.len();
        let coords: Vec<(f64, f64)> = vertices.iter().map(cartesian_to_spherical).collect();
        let rho: Vec<f64> = (0..n)
            .map(|a| {
                let mid = (vertices[a] + vertices[(a + 1) % n]).normalize();
                self.grid.interpolate(&self.density, &mid)
            })
            .collect();
        self.enclosed_sampled(vertices, &coords, &rho)
    }

    /// [`Self::enclosed`] with the vertex coordinates and the edge-midpoint
    /// densities already at hand.
    ///
    /// The result is the mean of the Green sums from the north pole (with
    /// `F`) and from the south pole (with `G = ∫_θ^π ρ sinθ' dθ'`): a curve
    /// and its antipodal image then see mirrored quadrature, and the value
    /// stays smooth in the vertices.
    pub fn enclosed_sampled(&self, vertices: &[Vec3], coords: &[(f64, f64)], rho_mid: &[f64]) -> f64 {
        0.5 * (self.enclosed_from(false, vertices, coords, rho_mid)
            + self.enclosed_from(true, vertices, coords, rho_mid))
    }

    fn enclosed_from(&self, south: bool, vertices: &[Vec3], coords: &[(f64, f64)], rho_mid: &[f64]) -> f64 {
        let n = vertices.len();
        let values: Vec<f64> = coords
            .iter()
            .map(|&(t, p)| if south { self.eval_south(t, p) } else { self.eval(t, p) })
            .collect();
        let mut w = 0.0;
        let mut w0 = 0.0;
        for a in 0..n {
            let b = (a + 1) % n;
            let (pa, pb) = (&vertices[a], &vertices[b]);
            // (1 − cos) measured from the pole in use
            let (excess, ca, cb) = if south {
                let r = |p: &Vec3| Vec3::new(p.x, p.y, -p.z);
                (
                    pole_triangle_area(&r(pa), &r(pb)),
                    -coords[a].0.cos(),
                    -coords[b].0.cos(),
                )
            } else {
                (pole_triangle_area(pa, pb), coords[a].0.cos(), coords[b].0.cos())
            };
            let rho = rho_mid[a];
            let dphi = wrapped(coords[b].1 - coords[a].1);
            let ra = values[a] - rho * (1.0 - ca);
            let rb = values[b] - rho * (1.0 - cb);
            w += rho * excess + 0.5 * (ra + rb) * dphi;
            w0 += excess;
        }
        match (south, w0 > 0.0) {
            (false, true) => w,
            (false, false) => self.total + w,
            (true, true) => self.total - w,
            (true, false) => -w,
        }
    }

    /// `G(θ, φ) = ∫_θ^π ρ sinθ' dθ'`.
    fn eval_south(&self, theta: f64, phi: f64) -> f64 {
        let np = self.grid.n_phi();
        let y = phi.rem_euclid(2.0 * PI) / self.grid.d_phi();
        let j0 = y.floor();
        let b = y - j0;
        let j0 = (j0 as usize) % np;
        let j1 = (j0 + 1) % np;
        let g = |j: usize| self.column_totals[j] - self.column(j, theta);
        (1.0 - b) * g(j0) + b * g(j1)
    }
}

/// Signed area of the geodesic triangle (north pole, a, b); equals
/// `∫ (1 − cosθ) dφ` along the arc from `a` to `b`.
fn pole_triangle_area(a: &Vec3, b: &Vec3) -> f64 {
    let det = a.x * b.y - a.y * b.x;
    2.0 * det.atan2(1.0 + a.z + b.z + a.dot(b))
}

fn wrapped(d: f64) -> f64 {
    if d > PI {
        d - 2.0 * PI
    } else if d <= -PI {
        d + 2.0 * PI
    } else {
        d
    }
}

/// `(∮ F dφ, ∮ (1 − cosθ) dφ)` by the trapezoid rule on the polyline.
///
/// The second sum is the round area of the left region when that region
/// misses the south pole and minus the area of its complement otherwise;
/// its sign decides which reading of the first sum applies.
pub(crate) fn green_sums<F: Fn(f64, f64) -> f64>(vertices: &[Vec3], potential: F) -> (f64, f64) {
    let n = vertices.len();
    let coords: Vec<(f64, f64)> = vertices.iter().map(cartesian_to_spherical).collect();
    let values: Vec<f64> = coords.iter().map(|&(t, p)| potential(t, p)).collect();
    let mut w = 0.0;
    let mut w0 = 0.0;
    for a in 0..n {
        let b = (a + 1) % n;
        let mut dphi = coords[b].1 - coords[a].1;
        if dphi > PI {
            dphi -= 2.0 * PI;
        } else if dphi <= -PI {
            dphi += 2.0 * PI;
        }
        w += 0.5 * (values[a] + values[b]) * dphi;
        w0 += 0.5 * ((1.0 - coords[a].0.cos()) + (1.0 - coords[b].0.cos())) * dphi;
    }
    (w, w0)
}

/// `∫ weight · e^{2u} dA₀` over the surface; halved on the projective plane.
pub fn integrate_volume(m: &ConformalMetric, weight: Option<&[f64]>) -> f64 {
    VolumePotential::for_metric(m, weight).total() / m.base().sheets()
}

/// Exact round area of the grid cell in row `i`.
pub fn cell_area(grid: &SphereGrid, i: usize) -> f64 {
    2.0 * grid.theta(i).sin() * (0.5 * grid.d_theta()).sin() * grid.d_phi()
}
