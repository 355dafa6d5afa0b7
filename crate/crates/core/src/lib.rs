//! Numerical spectral toolkit for Schrödinger operators attached to conical
//! surfaces in three dimensions.
//!
//! The pieces are:
//!
//! * [`geometry`]: loops on the unit sphere, arc-length sampling and their
//!   geodesic curvature;
//! * [`spectral1d`]: finite-difference 1D operators, inertia counting and
//!   Prüfer oscillation counting;
//! * [`threshold`]: the transverse line operator, its ground-state energy
//!   and truncation studies;
//! * [`curvature_operator`]: the periodic curvature-induced operator and the
//!   slope constant built from its negative eigenvalues;
//! * [`counting`]: inverse-square radial counting functions and the
//!   separated model that sums them.

pub mod counting;
pub mod curvature_operator;
pub mod error;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod registry;
pub mod spectral1d;
pub mod stats;
pub mod threshold;

pub use error::{Error, ErrorCategory, Result};
