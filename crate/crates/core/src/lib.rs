//! Sample-complexity objects for matrix-valued linear predictors
//! `x ↦ f(W x)` with `‖W − W₀‖_F ≤ B`.
//!
//! The crate builds explicit fat-shattering witnesses and checks them
//! exhaustively, estimates empirical Rademacher complexity, measures and
//! bounds covering numbers, runs projected SGD around a reference matrix, and
//! evaluates the closed-form sample-complexity bounds for these classes.
//!
//! Module map:
//!
//! - [`numerics`]: matrices, sparse vectors, spectral norms, SVD truncation, ball nets.
//! - [`lipschitz`]: Lipschitz extensions from finite anchors and max-affine functions.
//! - [`constructions`]: the three shattering instances and their verifier.
//! - [`complexity`]: Rademacher estimation, empirical covers, cover formulas, Dudley integral.
//! - [`learner`]: projected SGD and the learnability / uniform-convergence experiments.
//! - [`bounds`]: sample-complexity evaluators.

pub mod bounds;
pub mod complexity;
pub mod constructions;
mod error;
pub mod learner;
pub mod lipschitz;
pub mod numerics;
pub mod real_string;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
