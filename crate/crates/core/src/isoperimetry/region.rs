use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::metric::{Base, ConformalMetric};
use crate::quadrature::cell_area;
use crate::surface::Geometry;
use crate::Vec3;

/// Vertices used for geodesic-cap boundaries.
pub const CAP_VERTICES: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Round geodesic disc.
    Cap { center: Vec3, aperture: f64 },
    /// Region bounded by an arbitrary closed polyline.
    Polygon,
    /// Set of grid cells.
    GridIndicator { nodes: Vec<bool> },
}

/// A candidate region.
///
/// Curve-bounded regions are the side of `boundary` on its left, or the other
/// side when `complement` is set. On the projective plane a region is stored
/// through one sheet of its lift: the left side of `boundary` is a component
/// `A` disjoint from `−A`, the downstairs region is the image of `A ∪ −A`, and
/// `complement` selects the image of the rest of the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub boundary: Option<Curve>,
    pub complement: bool,
    pub volume_fraction: f64,
}

impl Region {
    pub fn cap(geo: &Geometry, center: &Vec3, aperture: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < PI) {
            return Err(Error::Domain(format!("cap aperture {aperture} outside (0, π)")));
        }
        if geo.metric().base() == Base::ProjectivePlane && aperture > PI / 2.0 {
            return Err(Error::Domain(
                "a cap wider than a hemisphere overlaps its antipodal image".into(),
            ));
        }
        let center = center.normalize();
        let boundary = Curve::geodesic_circle(&center, aperture, CAP_VERTICES)?;
        Self::from_parts(geo, RegionKind::Cap { center, aperture }, boundary, false)
    }

    pub fn polygon(geo: &Geometry, boundary: Curve) -> Result<Self> {
        Self::from_parts(geo, RegionKind::Polygon, boundary, false)
    }

    fn from_parts(geo: &Geometry, kind: RegionKind, boundary: Curve, complement: bool) -> Result<Self> {
        let mut r = Self {
            kind,
            boundary: Some(boundary),
            complement,
            volume_fraction: f64::NAN,
        };
        r.volume_fraction = measure(geo, &r)?.0;
        Ok(r)
    }

    pub fn indicator(m: &ConformalMetric, nodes: Vec<bool>) -> Result<Self> {
        if nodes.len() != m.grid().len() {
            return Err(Error::Domain("indicator length does not match grid".into()));
        }
        let mut r = Self {
            kind: RegionKind::GridIndicator { nodes },
            boundary: None,
            complement: false,
            volume_fraction: f64::NAN,
        };
        r.volume_fraction = indicator_measures(m, &r)?.0;
        Ok(r)
    }

    /// The complementary region; same boundary, fraction `1 − v`.
    pub fn complemented(&self) -> Self {
        let kind = match &self.kind {
            RegionKind::GridIndicator { nodes } => RegionKind::GridIndicator {
                nodes: nodes.iter().map(|b| !b).collect(),
            },
            k => k.clone(),
        };
        let complement = match self.kind {
            RegionKind::GridIndicator { .. } => false,
            _ => !self.complement,
        };
        Self {
            kind,
            boundary: self.boundary.clone(),
            complement,
            volume_fraction: 1.0 - self.volume_fraction,
        }
    }

    pub fn is_cap(&self) -> bool {
        matches!(self.kind, RegionKind::Cap { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match (&self.kind, self.complement) {
            (RegionKind::Cap { .. }, false) => "cap",
            (RegionKind::Cap { .. }, true) => "cap-complement",
            (RegionKind::Polygon, false) => "polygon",
            (RegionKind::Polygon, true) => "polygon-complement",
            (RegionKind::GridIndicator { .. }, _) => "grid-indicator",
        }
    }

    /// Whether a sphere point lies in the region (on the sheet carrying
    /// `boundary` for projective regions).
    pub fn contains(&self, geo: &Geometry, p: &Vec3) -> bool {
        let inside = match &self.kind {
            RegionKind::Cap { center, aperture } => crate::grid::geodesic_distance(center, p) < *aperture,
            RegionKind::GridIndicator { nodes } => return nodes[geo.grid().nearest_node(p)],
            RegionKind::Polygon => {
                let c = self.boundary.as_ref().expect("polygon regions carry a boundary");
                winding_contains(c, p)
            }
        };
        inside != self.complement
    }
}

/// Point-in-region test for the left side of a closed curve: the region is on
/// the left iff the curve winds positively around `p` as seen from outside,
/// with the convention fixed by the sign of the enclosed round area.
fn winding_contains(c: &Curve, p: &Vec3) -> bool {
    // rotate `p` to the north pole and count the winding of the curve in φ
    let (theta, phi) = crate::grid::cartesian_to_spherical(p);
    let (e_t, e_p) = crate::grid::tangent_basis(theta, phi);
    let local = |q: &Vec3| Vec3::new(q.dot(&e_t), q.dot(&e_p), q.dot(p));
    let pts: Vec<Vec3> = c.vertices().iter().map(local).collect();
    let mut wind = 0.0;
    let n = pts.len();
    for k in 0..n {
        let a = pts[k].y.atan2(pts[k].x);
        let b = pts[(k + 1) % n].y.atan2(pts[(k + 1) % n].x);
        let mut d = b - a;
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        wind += d;
    }
    // (e_θ, e_φ, p) is right-handed, so positive winding means p is on the left;
    // a winding of 0 means p is on the left iff the antipode is enclosed.
    if wind > PI {
        return true;
    }
    if wind < -PI {
        return false;
    }
    let (_, w0) = crate::quadrature::green_sums(&pts, |t, _| 1.0 - t.cos());
    w0 < 0.0
}

/// `(volume fraction, boundary area)` of a region.
pub fn region_measures(m: &ConformalMetric, r: &Region) -> Result<(f64, f64)> {
    match r.kind {
        RegionKind::GridIndicator { .. } => indicator_measures(m, r),
        _ => measure(&Geometry::new(m), r),
    }
}

/// [`region_measures`] against a prepared geometry.
pub fn measure(geo: &Geometry, r: &Region) -> Result<(f64, f64)> {
    let c = match (&r.kind, &r.boundary) {
        (RegionKind::GridIndicator { .. }, _) => return indicator_measures(geo.metric(), r),
        (_, Some(c)) => c,
        (_, None) => return Err(Error::Domain("curve-bounded region without boundary".into())),
    };
    let (left, length) = match &r.kind {
        RegionKind::Cap { center, aperture } => {
            let (v, l) = cap_measures(geo, center, *aperture, c);
            (v / geo.total_volume(), l)
        }
        _ => (left_fraction(geo, c), geo.length(c)),
    };
    let fraction = if r.complement { 1.0 - left } else { left };
    check_fraction(fraction)?;
    Ok((fraction, length))
}

/// Volume (on the sphere) and ĝ-length of the true cap whose boundary circle
/// passes through the vertices of `c`.
///
/// The polygon volume is completed by the circular segment over each edge,
/// weighted by the density at the arc midpoint, and the length is taken along
/// the circle arcs rather than the chords.
pub fn cap_measures(geo: &Geometry, center: &Vec3, aperture: f64, c: &Curve) -> (f64, f64) {
    let (v, l, _) = cap_integrals(geo, center, aperture, c);
    (v, l)
}

/// [`cap_measures`] plus `dV/dα = ∮ e^{2u} dℓ₀`.
pub(crate) fn cap_integrals(geo: &Geometry, center: &Vec3, aperture: f64, c: &Curve) -> (f64, f64, f64) {
    let n = c.len();
    let v = c.vertices();
    let (sa, ca) = aperture.sin_cos();
    let sector = 2.0 * PI * (1.0 - ca) / n as f64;
    let arc = 2.0 * PI * sa / n as f64;
    let u = geo.metric().u();
    let mut volume = geo.enclosed(c);
    let mut length = 0.0;
    let mut rate = 0.0;
    for k in 0..n {
        let (a, b) = (&v[k], &v[(k + 1) % n]);
        let triangle = 2.0
            * center
                .dot(&a.cross(b))
                .atan2(1.0 + center.dot(a) + center.dot(b) + a.dot(b));
        let mid = a + b;
        let radial = (mid - center * center.dot(&mid)).normalize();
        let m = center * ca + radial * sa;
        let um = geo.grid().interpolate(u, &m);
        volume += (2.0 * um).exp() * (sector - triangle);
        let e = um.exp();
        length += arc * e;
        rate += arc * e * e;
    }
    (volume, length, rate)
}

/// Fraction of `V_ĝ(M)` occupied by the left side of `c` (one sheet on the
/// projective plane).
pub fn left_fraction(geo: &Geometry, c: &Curve) -> f64 {
    geo.enclosed(c) / geo.total_volume()
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("empty or full region (fraction {f:.3e})")))
    }
}

/// Cell-sum volume and staircase boundary length of a grid indicator.
fn indicator_measures(m: &ConformalMetric, r: &Region) -> Result<(f64, f64)> {
    let RegionKind::GridIndicator { nodes } = &r.kind else {
        unreachable!("indicator_measures on a curve region")
    };
    let g = m.grid();
    let u = m.u();
    let (nt, np) = (g.n_theta(), g.n_phi());
    let mut inside = 0.0;
    let mut total = 0.0;
    for i in 0..nt {
        let a = cell_area(g, i);
        for j in 0..np {
            let n = g.index(i, j);
            let dv = a * (2.0 * u[n]).exp();
            total += dv;
            if nodes[n] {
                inside += dv;
            }
        }
    }
    let fraction = inside / (total / m.base().sheets());
    check_fraction(fraction)?;
    let mut length = 0.0;
    let face_factor = |a: usize, b: usize| (0.5 * (u[a] + u[b])).exp();
    for i in 0..nt {
        for j in 0..np {
            let n = g.index(i, j);
            let east = g.index(i, (j + 1) % np);
            if nodes[n] != nodes[east] {
                length += g.d_theta() * face_factor(n, east);
            }
            if i + 1 < nt {
                let south = g.index(i + 1, j);
                if nodes[n] != nodes[south] {
                    let s = (g.theta(i) + 0.5 * g.d_theta()).sin();
                    length += s * g.d_phi() * face_factor(n, south);
                }
            }
        }
    }
    Ok((fraction, length))
}
