//! # qhs
//!
//! Modeling, verification, and desk-scale solving of nonsmooth Nash-type
//! equilibrium systems: coupled inequality families built from Clarke
//! generalized directional derivatives, linear operators, monotone-type
//! couplings, and closed convex constraint sets.
//!
//! The library is organized around a small pipeline:
//!
//! * [`geometry`] — the constraint sets with exact projections and
//!   deterministic sampling;
//! * [`nonsmooth`] — the Clarke derivative estimator and calculus checks;
//! * [`system`] — the n-player problem object and its residuals;
//! * [`solvers`] — a grid oracle, a best-response relaxation, a covering
//!   audit, and the coercive truncation pathway;
//! * [`instances`] — the expression language, builtin problems, equilibrium
//!   verifiers, and quadrature-discretized integral couplings;
//! * [`cli`] — config loading and the machine-readable run reports behind
//!   the `qhs` binary.
//!
//! Every randomized routine takes an explicit seed and is bitwise
//! reproducible; nothing reads wall-clock entropy.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod instances;
mod linalg;
pub mod nonsmooth;
pub mod solvers;
pub mod system;

pub use error::{Error, Result};
