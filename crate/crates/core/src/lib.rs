//! Copositivity certificates and stable-set bounds.
//!
//! The crate decides membership of symmetric matrices in the standard
//! sum-of-squares inner approximations of the copositive cone, produces
//! certificates that can be re-verified in exact rational arithmetic, and
//! computes hierarchy bounds on the stability number of a graph.
//!
//! Modules, bottom up:
//!
//! * [`rational`] and [`polyarena`]: exact rationals and sparse polynomials.
//! * [`symlin`]: dense symmetric matrices, exact LDLᵀ and Jacobi eigenvalues.
//! * [`sdpcore`]: a primal-dual interior-point SDP solver.
//! * [`cones`]: membership tests and certificates.
//! * [`copositivity`]: exact simplex minimization and zero sets.
//! * [`graphs`] and [`bounds`]: stability number, graph matrices, bounds.
//! * [`catalog`]: named matrices and polynomials.

pub mod bounds;
pub mod catalog;
pub mod cones;
pub mod copositivity;
pub mod error;
pub mod graphs;
pub mod polyarena;
pub mod rational;
pub mod sdpcore;
pub mod symlin;

pub use error::{Error, Result};
pub use rational::Rational;
