use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SphereGrid;

/// Antipodal evenness tolerance accepted on construction of a projective metric.
pub const EVENNESS_TOL: f64 = 1e-12;

/// Model surface underlying a conformal metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Base {
    /// The unit round sphere.
    Sphere,
    /// The antipodal quotient of the unit sphere, stored through its even lift.
    ProjectivePlane,
}

impl Base {
    /// Number of sheets of the sphere over the base.
    pub fn sheets(self) -> f64 {
        match self {
            Base::Sphere => 1.0,
            Base::ProjectivePlane => 2.0,
        }
    }
}

/// `e^{2u}` times the round metric, with `u` sampled on a [`SphereGrid`], plus the
/// curvature lower bound `K` the metric is tested against.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    base: Base,
    grid: SphereGrid,
    u: Vec<f64>,
    k: f64,
}

impl ConformalMetric {
    pub fn new(base: Base, grid: SphereGrid, mut u: Vec<f64>, k: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::Domain(format!(
                "conformal factor has {} samples, grid has {} nodes",
                u.len(),
                grid.len()
            )));
        }
        if let Some(n) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("conformal factor is not finite at node {n}")));
        }
        if !k.is_finite() {
            return Err(Error::Domain("curvature bound K must be finite".into()));
        }
        if base == Base::ProjectivePlane {
            let defect = evenness_defect(&grid, &u);
            if defect.0 > EVENNESS_TOL {
                return Err(Error::Symmetry(format!(
                    "u differs from its antipodal image by {:.3e} at node {}",
                    defect.0, defect.1
                )));
            }
            // snap to exact evenness
            for n in 0..grid.len() {
                let a = grid.antipode(n);
                if a > n {
                    let mean = 0.5 * (u[n] + u[a]);
                    u[n] = mean;
                    u[a] = mean;
                }
            }
        }
        Ok(Self { base, grid, u, k })
    }

    /// The undeformed unit sphere or projective plane with bound `k`.
    pub fn round(base: Base, grid: SphereGrid, k: f64) -> Self {
        Self {
            base,
            grid,
            u: vec![0.0; grid.len()],
            k,
        }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    /// Replace the base tag, re-checking the symmetry invariant.
    pub fn with_base(&self, base: Base) -> Result<Self> {
        Self::new(base, self.grid, self.u.clone(), self.k)
    }

    /// `u + c`: the metric rescaled by the constant factor `e^{2c}`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| x + c).collect(),
            ..self.clone()
        }
    }

    /// `u + t·w`, the conformal family `e^{2tw}ĝ`.
    pub fn perturbed(&self, w: &[f64], t: f64) -> Result<Self> {
        if w.len() != self.u.len() {
            return Err(Error::Domain("perturbation has the wrong length".into()));
        }
        let u = self.u.iter().zip(w).map(|(a, b)| a + t * b).collect();
        Self::new(self.base, self.grid, u, self.k)
    }

    pub fn is_round(&self) -> bool {
        self.u.iter().all(|&x| x == 0.0)
    }
}

/// Largest |u(x) − u(−x)| over nodes, with the node attaining it.
pub fn evenness_defect(grid: &SphereGrid, u: &[f64]) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for (n, &val) in u.iter().enumerate() {
        let d = (val - u[grid.antipode(n)]).abs();
        if d > worst.0 {
            worst = (d, n);
        }
    }
    worst
}
