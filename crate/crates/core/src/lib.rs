//! Simulation and inference toolkit for strictly stationary mixing
//! processes: exact mixing coefficients on finite chains, the
//! dependence-adjusted norm and its moment machinery, bracketing entropy
//! for smoothness classes, empirical-process diagnostics, and a
//! Hausman-type linearity test with a Monte Carlo harness.

// Numeric guards are written as `!(x > 0.0)` on purpose: the negation
// treats NaN as a failure, which `x <= 0.0` would silently admit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over small dense matrices read better than iterator chains
// in the kernels below.
#![allow(clippy::needless_range_loop)]

pub mod classes;
pub mod eprocess;
pub mod error;
pub mod experiments;
pub mod hausman;
pub mod law;
pub mod linalg;
pub mod mixing;
pub mod norm;
pub mod quad;
pub mod seeding;
pub mod special;
