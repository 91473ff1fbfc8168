//! Measurements of curves and regions against a fixed conformal metric.

use crate::curvature::gradient;
use crate::curve::Curve;
use crate::grid::{cartesian_to_spherical, geodesic_distance, SphereGrid};
use crate::metric::ConformalMetric;
use crate::quadrature::VolumePotential;
use crate::Vec3;

/// A conformal metric with the derived data every curve measurement needs:
/// the volume potential of `e^{2u}` and the gradient of `u`.
#[derive(Debug, Clone)]
pub struct Geometry<'a> {
    metric: &'a ConformalMetric,
    potential: VolumePotential,
    grad_u: Vec<Vec3>,
}

impl<'a> Geometry<'a> {
    pub fn new(metric: &'a ConformalMetric) -> Self {
        Self {
            metric,
            potential: VolumePotential::for_metric(metric, None),
            grad_u: gradient(metric.grid(), metric.u()),
        }
    }

    pub fn metric(&self) -> &'a ConformalMetric {
        self.metric
    }

    pub fn grid(&self) -> &SphereGrid {
        self.metric.grid()
    }

    pub fn potential(&self) -> &VolumePotential {
        &self.potential
    }

    /// Volume of the whole sphere (the double cover on the projective plane).
    pub fn sphere_volume(&self) -> f64 {
        self.potential.total()
    }

    /// `V_ĝ(M)`.
    pub fn total_volume(&self) -> f64 {
        self.potential.total() / self.metric.base().sheets()
    }

    /// ĝ-volume of the region left of `c`, measured on the sphere.
    pub fn enclosed(&self, c: &Curve) -> f64 {
        self.potential.enclosed(c.vertices())
    }

    pub fn u_at(&self, p: &Vec3) -> f64 {
        self.grid().interpolate(self.metric.u(), p)
    }

    /// Round gradient of `u` at `p`, projected to the tangent plane.
    pub fn grad_u_at(&self, p: &Vec3) -> Vec3 {
        let g = self.grid().interpolate_vec(&self.grad_u, p);
        g - p * p.dot(&g)
    }

    /// `e^{u}` at each edge midpoint times the round edge length.
    pub fn edge_elements(&self, c: &Curve) -> Vec<f64> {
        c.edge_lengths()
            .iter()
            .zip(c.midpoints())
            .map(|(l, m)| l * self.u_at(&m).exp())
            .collect()
    }

    /// `A_ĝ(c)`.
    pub fn length(&self, c: &Curve) -> f64 {
        self.edge_elements(c).iter().sum()
    }

    /// `∫_c f dℓ_ĝ` for a nodal field `f`, sampled at edge midpoints.
    pub fn integrate_grid_field(&self, c: &Curve, field: &[f64]) -> f64 {
        c.edge_lengths()
            .iter()
            .zip(c.midpoints())
            .map(|(l, m)| l * self.u_at(&m).exp() * self.grid().interpolate(field, &m))
            .sum()
    }

    /// `∫_c φ dℓ_ĝ` for values given at the vertices (trapezoid per edge).
    pub fn integrate_vertex_field(&self, c: &Curve, values: &[f64]) -> f64 {
        let n = c.len();
        self.edge_elements(c)
            .iter()
            .enumerate()
            .map(|(k, e)| e * 0.5 * (values[k] + values[(k + 1) % n]))
            .sum()
    }

    /// ĝ dual length of each vertex, `e^{u_k}(ℓ_{k−1} + ℓ_k)/2`.
    pub fn vertex_weights(&self, c: &Curve) -> Vec<f64> {
        let n = c.len();
        let l = c.edge_lengths();
        c.vertices()
            .iter()
            .enumerate()
            .map(|(k, p)| self.u_at(p).exp() * 0.5 * (l[(k + n - 1) % n] + l[k]))
            .collect()
    }

    /// Geodesic curvature of `c` in ĝ relative to the inner normal,
    /// `k_ĝ = e^{−u}(k₀ − ∂_ν u)`.
    pub fn curvature(&self, c: &Curve) -> Vec<f64> {
        let k0 = c.round_curvature();
        c.vertices()
            .iter()
            .zip(c.inner_normals())
            .zip(k0)
            .map(|((p, nu), k)| (-self.u_at(p)).exp() * (k - self.grad_u_at(p).dot(&nu)))
            .collect()
    }

    /// Length-weighted mean of the ĝ geodesic curvature and its largest deviation.
    pub fn curvature_stats(&self, c: &Curve) -> (f64, f64) {
        let k = self.curvature(c);
        let w = self.vertex_weights(c);
        let mean = k.iter().zip(&w).map(|(k, w)| k * w).sum::<f64>() / w.iter().sum::<f64>();
        let dev = k.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
        (mean, dev)
    }
}

/// Metric samples along a curve from one pass over its vertices and edges.
#[derive(Debug, Clone)]
pub struct CurveSample {
    /// Round edge lengths.
    pub edges: Vec<f64>,
    /// `u` at the vertices.
    pub u: Vec<f64>,
    /// Tangential round gradient of `u` at the vertices.
    pub grad_u: Vec<Vec3>,
    /// `u` at the edge midpoints.
    pub u_mid: Vec<f64>,
    /// ĝ-volume left of the curve, on the sphere.
    pub enclosed: f64,
}

impl CurveSample {
    pub fn edge_elements(&self) -> Vec<f64> {
        self.edges.iter().zip(&self.u_mid).map(|(l, u)| l * u.exp()).collect()
    }

    pub fn length(&self) -> f64 {
        self.edges.iter().zip(&self.u_mid).map(|(l, u)| l * u.exp()).sum()
    }

    /// ĝ dual length of each vertex.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let n = self.edges.len();
        (0..n)
            .map(|k| self.u[k].exp() * 0.5 * (self.edges[(k + n - 1) % n] + self.edges[k]))
            .collect()
    }

    /// `k_ĝ` at each vertex from the curve's turning angles and inner normals.
    pub fn curvature(&self, turning: &[f64], normals: &[Vec3]) -> Vec<f64> {
        let n = self.edges.len();
        (0..n)
            .map(|k| {
                let k0 = turning[k] / (0.5 * (self.edges[(k + n - 1) % n] + self.edges[k]));
                (-self.u[k]).exp() * (k0 - self.grad_u[k].dot(&normals[k]))
            })
            .collect()
    }
}

impl Geometry<'_> {
    pub fn sample_curve(&self, c: &Curve) -> CurveSample {
        let grid = self.grid();
        let u = self.metric.u();
        let density = self.potential.density();
        let v = c.vertices();
        let n = v.len();
        let coords: Vec<(f64, f64)> = v.iter().map(cartesian_to_spherical).collect();
        let mut us = Vec::with_capacity(n);
        let mut grad = Vec::with_capacity(n);
        for (p, &(t, f)) in v.iter().zip(&coords) {
            let st = grid.stencil(t, f);
            us.push(st.iter().map(|&(i, w)| w * u[i]).sum());
            let g = st.iter().fold(Vec3::zeros(), |acc, &(i, w)| acc + self.grad_u[i] * w);
            grad.push(g - p * p.dot(&g));
        }
        let mut edges = Vec::with_capacity(n);
        let mut u_mid = Vec::with_capacity(n);
        let mut rho_mid = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (&v[k], &v[(k + 1) % n]);
            edges.push(geodesic_distance(a, b));
            let (t, f) = cartesian_to_spherical(&(a + b).normalize());
            let st = grid.stencil(t, f);
            u_mid.push(st.iter().map(|&(i, w)| w * u[i]).sum());
            rho_mid.push(st.iter().map(|&(i, w)| w * density[i]).sum());
        }
        let enclosed = self.potential.enclosed_sampled(v, &coords, &rho_mid);
        CurveSample {
            edges,
            u: us,
            grad_u: grad,
            u_mid,
            enclosed,
        }
    }
}

/// ĝ-length of a closed curve.
pub fn curve_length(m: &ConformalMetric, c: &Curve) -> f64 {
    let grid = m.grid();
    c.edge_lengths()
        .iter()
        .zip(c.midpoints())
        .map(|(l, mid)| l * grid.interpolate(m.u(), &mid).exp())
        .sum()
}

/// Per-vertex ĝ geodesic curvature with respect to the inner normal.
pub fn geodesic_curvature(m: &ConformalMetric, c: &Curve) -> Vec<f64> {
    Geometry::new(m).curvature(c)
}
