//! Cell-centred latitude/longitude lattice on the unit sphere.
//!
//! Colatitudes sit at `θ_i = (i + 1/2)π/n_theta`, so no node lies on a pole,
//! and longitudes at `φ_j = 2πj/n_phi`. With `n_phi` even the antipodal map
//! `(θ, φ) ↦ (π − θ, φ + π)` sends nodes to nodes. Stencils and interpolants
//! that reach past a pole use the same identification: the ghost row at
//! `−θ` in column `φ` is the physical row `θ` in column `φ + π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

pub const MIN_N_THETA: usize = 8;
pub const MIN_N_PHI: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_N_THETA {
            return Err(Error::Resolution(format!(
                "n_theta = {n_theta} is below the minimum {MIN_N_THETA}"
            )));
        }
        if n_phi < MIN_N_PHI || !n_phi.is_multiple_of(2) {
            return Err(Error::Resolution(format!(
                "n_phi = {n_phi} must be even and at least {MIN_N_PHI}"
            )));
        }
        Ok(Self { n_theta, n_phi })
    }

    /// The default 256 × 512 lattice.
    pub fn standard() -> Self {
        Self {
            n_theta: 256,
            n_phi: 512,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.d_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.d_phi()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.n_phi, node % self.n_phi)
    }

    /// Node index of the antipode of `node`.
    #[inline]
    pub fn antipode(&self, node: usize) -> usize {
        let (i, j) = self.coords(node);
        self.index(self.n_theta - 1 - i, (j + self.n_phi / 2) % self.n_phi)
    }

    pub fn position(&self, node: usize) -> Vec3 {
        let (i, j) = self.coords(node);
        spherical_to_cartesian(self.theta(i), self.phi(j))
    }

    /// Resolve a possibly out-of-range (row, column) pair to a node, crossing
    /// a pole where needed.
    #[inline]
    pub fn wrap(&self, i: isize, j: isize) -> usize {
        let nt = self.n_theta as isize;
        let np = self.n_phi as isize;
        let (mut i, mut j) = (i, j);
        if i < 0 {
            i = -1 - i;
            j += np / 2;
        } else if i >= nt {
            i = 2 * nt - 1 - i;
            j += np / 2;
        }
        self.index(i as usize, j.rem_euclid(np) as usize)
    }

    /// Fill a field by evaluating `f(θ, φ)` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_theta {
            let theta = self.theta(i);
            for j in 0..self.n_phi {
                out.push(f(theta, self.phi(j)));
            }
        }
        out
    }

    /// Bilinear interpolation stencil at (θ, φ): four nodes and weights.
    pub fn stencil(&self, theta: f64, phi: f64) -> [(usize, f64); 4] {
        let x = theta / self.d_theta() - 0.5;
        let y = phi.rem_euclid(2.0 * PI) / self.d_phi();
        let i0 = x.floor();
        let j0 = y.floor();
        let a = x - i0;
        let b = y - j0;
        let (i0, j0) = (i0 as isize, j0 as isize);
        [
            (self.wrap(i0, j0), (1.0 - a) * (1.0 - b)),
            (self.wrap(i0, j0 + 1), (1.0 - a) * b),
            (self.wrap(i0 + 1, j0), a * (1.0 - b)),
            (self.wrap(i0 + 1, j0 + 1), a * b),
        ]
    }

    /// Bilinear interpolation of a nodal field at a point of the sphere.
    pub fn interpolate(&self, field: &[f64], p: &Vec3) -> f64 {
        let (theta, phi) = cartesian_to_spherical(p);
        self.stencil(theta, phi).iter().map(|&(n, w)| w * field[n]).sum()
    }

    /// Bilinear interpolation of a nodal 3-vector field.
    pub fn interpolate_vec(&self, field: &[Vec3], p: &Vec3) -> Vec3 {
        let (theta, phi) = cartesian_to_spherical(p);
        self.stencil(theta, phi)
            .iter()
            .fold(Vec3::zeros(), |acc, &(n, w)| acc + field[n] * w)
    }

    /// Lowest node index whose geodesic distance to `p` is minimal.
    pub fn nearest_node(&self, p: &Vec3) -> usize {
        let (theta, phi) = cartesian_to_spherical(p);
        // Search the 3×3 block around the containing cell; exact on a lat-long grid
        // away from the poles and near-exact at them.
        let x = (theta / self.d_theta() - 0.5).round() as isize;
        let y = (phi / self.d_phi()).round() as isize;
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        let candidates: Vec<usize> = if x <= 1 || x >= self.n_theta as isize - 2 {
            // near a pole every column of the polar rows is close
            let rows: Vec<usize> = if x <= 1 {
                (0..3).collect()
            } else {
                (self.n_theta - 3..self.n_theta).collect()
            };
            rows.iter()
                .flat_map(|&i| (0..self.n_phi).map(move |j| (i, j)))
                .map(|(i, j)| self.index(i, j))
                .collect()
        } else {
            let mut c = Vec::with_capacity(9);
            for di in -1..=1 {
                for dj in -1..=1 {
                    c.push(self.wrap(x + di, y + dj));
                }
            }
            c
        };
        for n in candidates {
            let d = self.position(n).dot(p);
            if d > best.0 || (d == best.0 && n < best.1) {
                best = (d, n);
            }
        }
        best.1
    }
}

pub fn spherical_to_cartesian(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Colatitude in [0, π] and longitude in [0, 2π).
pub fn cartesian_to_spherical(p: &Vec3) -> (f64, f64) {
    let r = p.norm();
    let theta = (p.z / r).clamp(-1.0, 1.0).acos();
    let phi = p.y.atan2(p.x).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// Great-circle distance between two unit vectors.
pub fn geodesic_distance(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Unit tangent basis (e_θ, e_φ) at (θ, φ).
pub fn tangent_basis(theta: f64, phi: f64) -> (Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (Vec3::new(ct * cp, ct * sp, -st), Vec3::new(-sp, cp, 0.0))
}
