//! Radial finite-volume laboratory for the Dirichlet problem
//!
//! ```text
//! -div( a(x) grad u / (1 + |u|)^p ) = f / u^gamma   in B_1 in R^N,   u = 0 on the sphere,
//! ```
//!
//! solved through the truncated level-n problems and checked against the
//! regularity claims that hold in each `(p, gamma, m)` regime.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::{grad_lp_seminorm, interior_min, lp_norm, DiscreteField, RadialMesh};
pub use model::{
    classify_regime, truncate, CaseId, Claim, CoeffProfile, CoefficientSpec, ExponentTable,
    ProblemSpec, RegimePrediction, SourceSpec,
};
pub use solver::{
    assemble_frozen_system, continuation_sequence, picard_solve, solve_tridiagonal, SolveOutcome,
    SolverOptions, TridiagonalSystem,
};
