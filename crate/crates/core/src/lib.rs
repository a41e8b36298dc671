//! Coupled bulk-surface heat flow on planar domains.
//!
//! The crate discretizes parabolic problems whose bulk diffusion may
//! degenerate towards a lower-dimensional set, with Dirichlet, Neumann and
//! dynamic boundary parts and a dynamic interface carrying its own
//! (possibly degenerate) surface diffusion. Everything is built around a
//! P1 realization of the energy form: a stiffness matrix `T`, a block mass
//! `M` on bulk, boundary and interface nodes, and the trace map `J` that
//! ties them together.
//!
//! Modules:
//! - [`geometry`]: meshes, surface chains, Lipschitz graph charts, distances.
//! - [`weights`]: distance weights, singular cell quadrature, dyadic-cube scans.
//! - [`assembly`]: coefficients, dof maps, and the discrete operator pencil.
//! - [`evolution`]: theta-scheme time stepping, monitors, interface flux recovery.
//! - [`spectral`]: eigenpairs, numerical range, fractional powers, embedding exponents.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};

pub use nalgebra::{Matrix2, Point2, Vector2};

/// A point in the plane.
pub type Point = Point2<f64>;
