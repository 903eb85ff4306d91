//! Polytope-level toolkit for weighted extremal metrics on toric surfaces.
//!
//! The crate works entirely on the moment polytope of a toric surface:
//!
//! - [`polytope`]: labelled convex polygons and the Hirzebruch trapezoids.
//! - [`quadrature`]: adaptive integration of `g / f^k` over a polygon and over
//!   its boundary with the labelled measure `dσ`.
//! - [`futaki`]: the weighted Donaldson-Futaki invariant, the extremal affine
//!   function and crease-function scans.
//! - [`abreu`]: the Guillemin potential and the weighted Abreu scalar curvature.
//! - [`twist`]: the projective change of variables `x ↦ x / f(x)`.
//! - [`families`]: the explicit affine families on the Hirzebruch trapezoids.
//! - [`solver`]: numerical recovery of condition-(a) solutions, extremal-pair
//!   checks and the stability verdict.

pub mod abreu;
pub mod error;
pub mod families;
pub mod futaki;
pub mod geom;
pub mod linalg;
pub mod poly;
pub mod polytope;
pub mod quadrature;
pub mod solver;
pub mod twist;

pub use error::{Error, ErrorClass, Result};
pub use polytope::{AffineMap2, LabelledPolytope2, QuadType};

/// Library version string.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
