//! Ricci tensor of `e^{2u}g` on a flat periodic test lattice in any dimension:
//!
//! `Ric_ĝ = Ric_g − (Δu) g − (n−2) Hess u + (n−2)(du⊗du − |∇u|² g)`.
//!
//! This exists to exercise the transformation law away from `n = 2`; the
//! surface pipeline only uses its two-dimensional trace through
//! [`crate::curvature::gauss_curvature`].

use crate::error::{Error, Result};

/// Periodic lattice on `[0, 2π)^dim` with `n` points per axis and identity metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    n: usize,
}

impl Lattice {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("dimension {dim} < 2")));
        }
        if n < 4 {
            return Err(Error::Resolution(format!("{n} points per axis is too coarse")));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut() {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().rev().fold(0, |acc, &k| acc * self.n + k)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).iter().map(|&k| k as f64 * h).collect()
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|k| f(&self.coords(k))).collect()
    }

    fn shifted(&self, idx: usize, shifts: &[(usize, isize)]) -> usize {
        let mut m = self.multi_index(idx);
        for &(axis, s) in shifts {
            m[axis] = (m[axis] as isize + s).rem_euclid(self.n as isize) as usize;
        }
        self.flat(&m)
    }
}

/// Pointwise transformation law. `hess` is row-major `dim × dim`, `base_ric`
/// likewise; the base metric is the identity.
pub fn conformal_ricci_pointwise(dim: usize, base_ric: &[f64], hess: &[f64], grad: &[f64]) -> Vec<f64> {
    let lap: f64 = (0..dim).map(|a| hess[a * dim + a]).sum();
    let c = dim as f64 - 2.0;
    let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
    let mut out = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let delta = if a == b { 1.0 } else { 0.0 };
            let mut v = base_ric[a * dim + b] - lap * delta;
            if c != 0.0 {
                v += c * (-hess[a * dim + b] + grad[a] * grad[b] - grad_sq * delta);
            }
            out[a * dim + b] = v;
        }
    }
    out
}

/// `Ric_ĝ` at every lattice point from second-order central differences of `u`.
/// `base_ric` holds `dim²` entries per point.
pub fn conformal_ricci_nd(lattice: &Lattice, u: &[f64], base_ric: &[f64]) -> Result<Vec<f64>> {
    let dim = lattice.dim();
    let dd = dim * dim;
    if u.len() != lattice.len() || base_ric.len() != lattice.len() * dd {
        return Err(Error::Domain("field sizes do not match the lattice".into()));
    }
    let h = lattice.spacing();
    let mut out = Vec::with_capacity(lattice.len() * dd);
    let mut hess = vec![0.0; dd];
    let mut grad = vec![0.0; dim];
    for k in 0..lattice.len() {
        let at = |s: &[(usize, isize)]| u[lattice.shifted(k, s)];
        for a in 0..dim {
            grad[a] = (at(&[(a, 1)]) - at(&[(a, -1)])) / (2.0 * h);
            hess[a * dim + a] = (at(&[(a, 1)]) - 2.0 * u[k] + at(&[(a, -1)])) / (h * h);
            for b in (a + 1)..dim {
                let v = (at(&[(a, 1), (b, 1)]) - at(&[(a, 1), (b, -1)]) - at(&[(a, -1), (b, 1)])
                    + at(&[(a, -1), (b, -1)]))
                    / (4.0 * h * h);
                hess[a * dim + b] = v;
                hess[b * dim + a] = v;
            }
        }
        out.extend(conformal_ricci_pointwise(
            dim,
            &base_ric[k * dd..(k + 1) * dd],
            &hess,
            &grad,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_below_two_is_rejected() {
        assert!(matches!(Lattice::new(1, 16), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_factor_leaves_ricci_unchanged() {
        let lat = Lattice::new(3, 8).unwrap();
        let u = vec![1.3f64.ln(); lat.len()];
        let base: Vec<f64> = (0..lat.len() * 9).map(|k| (k % 7) as f64 * 0.1).collect();
        let out = conformal_ricci_nd(&lat, &u, &base).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn two_dimensions_reduce_to_laplacian_term() {
        let lat = Lattice::new(2, 32).unwrap();
        let u = lat.sample(|x| 0.3 * x[0].sin() * x[1].cos());
        let base = vec![0.0; lat.len() * 4];
        let out = conformal_ricci_nd(&lat, &u, &base).unwrap();
        let h = lat.spacing();
        // exact Δu = −2u; second-order stencils carry a relative error ≈ h²/12 per axis
        for k in 0..lat.len() {
            let want = 2.0 * u[k];
            assert!((out[4 * k] - want).abs() < 0.3 * h * h);
            assert!((out[4 * k + 3] - want).abs() < 0.3 * h * h);
            assert_eq!(out[4 * k + 1], 0.0);
        }
    }

    #[test]
    fn three_dimensional_sine_matches_symbolic_expansion() {
        // u = ε sin x₁ on the flat torus: ∂₁u = ε cos x₁, ∂₁₁u = −ε sin x₁, so
        // Ric₁₁ = 2ε sin x₁, Ric₂₂ = Ric₃₃ = ε sin x₁ − ε² cos² x₁, off-diagonal 0.
        let eps = 0.1;
        let n = 32;
        let lat = Lattice::new(3, n).unwrap();
        let u = lat.sample(|x| eps * x[0].sin());
        let out = conformal_ricci_nd(&lat, &u, &vec![0.0; lat.len() * 9]).unwrap();
        let h = lat.spacing();
        let tol = 2.0 * eps * h * h;
        for k in [0usize, 5, 77, 1000, lat.len() - 1] {
            let x = lat.coords(k)[0];
            let (s, c) = x.sin_cos();
            let want = [
                2.0 * eps * s,
                0.0,
                0.0,
                0.0,
                eps * s - eps * eps * c * c,
                0.0,
                0.0,
                0.0,
                eps * s - eps * eps * c * c,
            ];
            for (got, w) in out[9 * k..9 * k + 9].iter().zip(want) {
                assert!((got - w).abs() < tol, "node {k}: {got} vs {w}");
            }
        }
    }

    proptest! {
        #[test]
        fn surface_law_depends_only_on_laplacian(
            h in proptest::collection::vec(-5.0f64..5.0, 4),
            g in proptest::collection::vec(-5.0f64..5.0, 2),
            skew in -5.0f64..5.0,
            r in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let base = conformal_ricci_pointwise(2, &r, &h, &g);
            // same trace, different off-diagonal and trace-free parts, different gradient
            let h2 = [h[0] + skew, h[1] - skew, h[2] + 2.0 * skew, h[3] - skew];
            let g2 = [g[1] * 3.0, -g[0]];
            let other = conformal_ricci_pointwise(2, &r, &h2, &g2);
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
