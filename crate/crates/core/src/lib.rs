// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod curve;
pub mod error;
pub mod fields;
pub mod grid;
pub mod isoperimetry;
pub mod metric;
pub mod quadrature;
pub mod quotient;
pub mod ricci;
pub mod rigidity;
pub mod surface;
pub mod variation;

pub use error::{Error, Result};

/// Ambient 3-vector; points of the unit sphere and tangent vectors.
pub type Vec3 = nalgebra::Vector3<f64>;
