//! Closed polylines on the unit sphere, oriented with their region on the left.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cartesian_to_spherical, geodesic_distance, tangent_basis};
use crate::Vec3;

/// Largest angle an edge may subtend.
pub const MAX_EDGE_ANGLE: f64 = PI / 4.0;
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    vertices: Vec<Vec3>,
}

impl Curve {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Resolution("a closed curve needs at least 3 vertices".into()));
        }
        for (k, p) in vertices.iter().enumerate() {
            if (p.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::Domain(format!("vertex {k} is not on the unit sphere")));
            }
        }
        let n = vertices.len();
        for k in 0..n {
            let d = geodesic_distance(&vertices[k], &vertices[(k + 1) % n]);
            if d == 0.0 {
                return Err(Error::Resolution(format!("vertices {k} and {} coincide", (k + 1) % n)));
            }
            if d >= MAX_EDGE_ANGLE {
                return Err(Error::Resolution(format!(
                    "edge {k} subtends {d:.3} rad, above the π/4 resolution bound"
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Project arbitrary nonzero points to the sphere, then validate.
    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        Self::new(points.into_iter().map(|p| p.normalize()).collect())
    }

    /// Geodesic circle of round radius `radius` about `center`, counter-clockwise
    /// seen from outside, so the disc about `center` is on the left.
    pub fn geodesic_circle(center: &Vec3, radius: f64, n: usize) -> Result<Self> {
        let c = center.normalize();
        let (theta, phi) = cartesian_to_spherical(&c);
        let e1 = tangent_basis(theta, phi).0;
        let e1 = (e1 - c * c.dot(&e1)).normalize();
        let e2 = c.cross(&e1);
        let (sr, cr) = radius.sin_cos();
        let vertices = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                (c * cr + (e1 * a.cos() + e2 * a.sin()) * sr).normalize()
            })
            .collect();
        Self::new(vertices)
    }

    /// Circle of colatitude `theta`, traversed eastwards (polar cap on the left).
    pub fn latitude(theta: f64, n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| crate::grid::spherical_to_cartesian(theta, 2.0 * PI * k as f64 / n as f64))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    /// Image under `x ↦ −x`, re-oriented so the image region stays on the left
    /// (the antipodal map reverses orientation).
    pub fn antipodal(&self) -> Self {
        let mut v: Vec<Vec3> = self.vertices.iter().map(|p| -p).collect();
        v.reverse();
        Self { vertices: v }
    }

    /// Round arclength of each edge `k → k+1`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| geodesic_distance(&self.vertices[k], &self.vertices[(k + 1) % n]))
            .collect()
    }

    pub fn round_length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Spherical midpoint of each edge.
    pub fn midpoints(&self) -> Vec<Vec3> {
        let n = self.len();
        (0..n)
            .map(|k| (self.vertices[k] + self.vertices[(k + 1) % n]).normalize())
            .collect()
    }

    /// Incoming and outgoing unit tangents at every vertex.
    fn tangents(&self) -> Vec<(Vec3, Vec3)> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let prev = self.vertices[(i + n - 1) % n];
                let p = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                let t_in = prev.cross(&p).cross(&p).normalize();
                let t_out = p.cross(&next).cross(&p).normalize();
                (t_in, t_out)
            })
            .collect()
    }

    /// Signed turning angle at each vertex, positive when turning left.
    pub fn turning_angles(&self) -> Vec<f64> {
        self.tangents()
            .iter()
            .zip(&self.vertices)
            .map(|((t_in, t_out), p)| {
                let a = p.dot(&t_in.cross(t_out)).atan2(t_in.dot(t_out));
                if a.abs() < 1e-14 {
                    0.0
                } else {
                    a
                }
            })
            .collect()
    }

    /// Round geodesic curvature per vertex: turning angle over dual length.
    pub fn round_curvature(&self) -> Vec<f64> {
        let n = self.len();
        let lengths = self.edge_lengths();
        self.turning_angles()
            .iter()
            .enumerate()
            .map(|(i, a)| a / (0.5 * (lengths[(i + n - 1) % n] + lengths[i])))
            .collect()
    }

    /// Turning angles and inner normals from a single pass over the tangents.
    pub fn frame(&self) -> (Vec<f64>, Vec<Vec3>) {
        self.tangents()
            .iter()
            .zip(&self.vertices)
            .map(|((t_in, t_out), p)| {
                let a = p.dot(&t_in.cross(t_out)).atan2(t_in.dot(t_out));
                let a = if a.abs() < 1e-14 { 0.0 } else { a };
                (a, p.cross(&(t_in + t_out)).normalize())
            })
            .unzip()
    }

    /// Unit normal at each vertex pointing into the left region.
    pub fn inner_normals(&self) -> Vec<Vec3> {
        self.tangents()
            .iter()
            .zip(&self.vertices)
            .map(|((t_in, t_out), p)| p.cross(&(t_in + t_out)).normalize())
            .collect()
    }

    /// Move each vertex along the sphere by round distance `offsets[k]` in
    /// direction `directions[k]` (a unit tangent at the vertex).
    pub fn displaced(&self, directions: &[Vec3], offsets: &[f64]) -> Result<Self> {
        let vertices = self
            .vertices
            .iter()
            .zip(directions)
            .zip(offsets)
            .map(|((p, d), &s)| (p * s.cos() + d * s.sin()).normalize())
            .collect();
        Self::new(vertices)
    }

    /// [`Self::displaced`] without re-validating; callers check the edges.
    pub(crate) fn displaced_unchecked(&self, directions: &[Vec3], offsets: &[f64]) -> Self {
        let vertices = self
            .vertices
            .iter()
            .zip(directions)
            .zip(offsets)
            .map(|((p, d), &s)| (p * s.cos() + d * s.sin()).normalize())
            .collect();
        Self { vertices }
    }

    /// Double the vertex count with the four-point interpolatory scheme,
    /// projected back to the sphere.
    pub fn subdivided(&self) -> Result<Self> {
        let n = self.len();
        let v = &self.vertices;
        let mut out = Vec::with_capacity(2 * n);
        for k in 0..n {
            let (a, b, c, d) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n], v[(k + 2) % n]);
            out.push(b);
            out.push(((b + c) * 9.0 - a - d).normalize());
        }
        Self::new(out)
    }

    /// Resample at `n` vertices equally spaced in round arclength.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        let lengths = self.edge_lengths();
        let total: f64 = lengths.iter().sum();
        let m = self.len();
        let mut out = Vec::with_capacity(n);
        let mut edge = 0;
        let mut start = 0.0;
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while edge < m - 1 && start + lengths[edge] < target {
                start += lengths[edge];
                edge += 1;
            }
            let a = self.vertices[edge];
            let b = self.vertices[(edge + 1) % m];
            let w = lengths[edge];
            let tau = ((target - start) / w).clamp(0.0, 1.0);
            let p = if w < 1e-12 {
                a
            } else {
                (a * ((1.0 - tau) * w).sin() + b * (tau * w).sin()) / w.sin()
            };
            out.push(p.normalize());
        }
        Self::new(out)
    }

    /// Whether two non-adjacent edges cross.
    pub fn self_intersects(&self) -> bool {
        let n = self.len();
        let mids = self.midpoints();
        let lengths = self.edge_lengths();
        for a in 0..n {
            let (p, q) = (self.vertices[a], self.vertices[(a + 1) % n]);
            let na = p.cross(&q);
            for b in (a + 2)..n {
                if a == 0 && b == n - 1 {
                    continue;
                }
                if geodesic_distance(&mids[a], &mids[b]) > 0.5 * (lengths[a] + lengths[b]) + 1e-12 {
                    continue;
                }
                let (r, s) = (self.vertices[b], self.vertices[(b + 1) % n]);
                let nb = r.cross(&s);
                let side_r = r.dot(&na);
                let side_s = s.dot(&na);
                let side_p = p.dot(&nb);
                let side_q = q.dot(&nb);
                if side_r * side_s < 0.0 && side_p * side_q < 0.0 {
                    return true;
                }
            }
        }
        false
    }

    /// Index of the vertex nearest to `p`.
    pub fn nearest_vertex(&self, p: &Vec3) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, v) in self.vertices.iter().enumerate() {
            let d = v.dot(p);
            if d > best.0 {
                best = (d, k);
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = Vec3::new(0.0, 0.0, 1.0);
        let q = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(Curve::new(vec![p, q, -p]), Err(Error::Resolution(_))));
        assert!(matches!(Curve::new(vec![p * 1.1, q, -p]), Err(Error::Domain(_))));
        assert!(matches!(Curve::latitude(1.0, 6), Err(Error::Resolution(_))));
        assert!(Curve::latitude(1.0, 64).is_ok());
    }

    #[test]
    fn latitude_circle_curvature_and_normal() {
        let t0 = PI / 3.0;
        let c = Curve::latitude(t0, 512).unwrap();
        for k in c.round_curvature() {
            assert!((k - 1.0 / t0.tan()).abs() < 5e-3);
        }
        // inner normal points north for the polar cap
        for (n, p) in c.inner_normals().iter().zip(c.vertices()) {
            let (t, ph) = cartesian_to_spherical(p);
            let north = -tangent_basis(t, ph).0;
            assert!((n - north).norm() < 1e-9);
        }
        let eq = Curve::latitude(PI / 2.0, 512).unwrap();
        assert!(eq.round_curvature().iter().all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn geodesic_circle_about_north_matches_latitude() {
        let a = Curve::geodesic_circle(&Vec3::z(), 0.8, 64).unwrap();
        let b = Curve::latitude(0.8, 64).unwrap();
        for (p, q) in a.vertices().iter().zip(b.vertices()) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn antipodal_curve_keeps_orientation_convention() {
        let c = Curve::geodesic_circle(&Vec3::new(0.3, 0.4, 0.8).normalize(), 0.5, 128).unwrap();
        let a = c.antipodal();
        let k: Vec<f64> = a.round_curvature();
        assert!(k.iter().all(|&k| k > 0.0), "antipodal disc must stay on the left");
    }

    #[test]
    fn resampling_preserves_circle() {
        let c = Curve::latitude(1.0, 100).unwrap();
        let r = c.resampled(150).unwrap();
        assert_eq!(r.len(), 150);
        for p in r.vertices() {
            assert!((cartesian_to_spherical(p).0 - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn detects_crossing() {
        let c = Curve::latitude(1.0, 256).unwrap();
        assert!(!c.self_intersects());
        // reversing a short run makes its first and last edges cross
        let mut v = c.vertices().to_vec();
        v[10..14].reverse();
        let bad = Curve::new(v).unwrap();
        assert!(bad.self_intersects());
    }
}
