//! Numerical solver for the planar L_p Gaussian chord Minkowski problem.
//!
//! An origin-symmetric convex body, given by its support function on a
//! uniform angle grid, is evolved by a normalized Gauss curvature flow until
//! its support function solves
//!
//! ```text
//! τ V_q(h) h^{1-p} (h'' + h) = f
//! ```
//!
//! where `V_q` is the Gaussian chord potential on the boundary. The crate also
//! ships the checks that certify such a solution: Monge–Ampère residuals,
//! conservation of the Gaussian chord integral, monotonicity of the flow
//! functional, first-variation finite differences and a Cartesian oracle.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chord;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod quadrature;
pub mod support;

pub use error::{Error, Result};
