//! Numerical laboratory for bounded minimal graphic and p-harmonic functions on
//! rotationally symmetric Cartan-Hadamard manifolds.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a pure
//! function of immutable inputs; IO, configuration and parallel fan-out live in
//! the companion `asymdir` crate.
//!
//! Module map:
//!
//! * [`manifold`] - warped metrics `dr² + f(r)² dθ²`, curvature profiles, volume.
//! * [`criteria`] - improper-integral solvability and parabolicity tests.
//! * [`boundary`] / [`barriers`] - zonal boundary data, explicit barriers, gradient bounds.
//! * [`grid`] / [`solver`] - conservative finite-volume Dirichlet solver in zonal coordinates.
//! * [`experiments`] - boundary-convergence, Liouville and oscillation-decay diagnostics.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod barriers;
pub mod boundary;
pub mod criteria;
mod equation;
mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod manifold;
pub(crate) mod math;
pub mod ode;
pub mod quad;
pub mod solver;

pub use equation::Equation;
pub use error::{Error, Result};
