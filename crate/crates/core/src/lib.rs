//! Geodesics and minimal-acceleration diagnostics on the group of diffeomorphisms
//! of `[0, 1]` carrying the right-invariant `H²` metric.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains no I/O. It covers:
//!
//! * [`numerics`]: uniform grids, quadrature, fixed-step integrators.
//! * [`kernel`]: the reproducing kernel of `H₀²([0,1])` and its derivatives.
//! * [`landmark`]: the Hamiltonian landmark system and Lagrangian flow reconstruction.
//! * [`coords`]: the `q = ∂ₓ log ∂ₓφ` chart, its constraints and projections.
//! * [`geodesic_pq`]: the constrained geodesic system in `(p, q)` coordinates.
//! * [`functional`]: acceleration functionals and the relaxed functional.
//! * [`fisher_rao`]: the Fisher-Rao functional on measure pairs and oscillation synthesis.
//! * [`riccati`]: Riccati solvers, comparison checks and optimality tests.
//! * [`experiment`]: the reparametrized-geodesic counterexample driver.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coords;
pub mod error;
pub mod experiment;
pub mod fisher_rao;
pub mod functional;
pub mod geodesic_pq;
pub mod kernel;
pub mod landmark;
pub mod numerics;
pub mod riccati;

pub use error::{Error, Result};
