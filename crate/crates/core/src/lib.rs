//! Adaptive-LASSO quantile regression for single-phase and multiphase
//! (change-point) linear models.
//!
//! The crate is organized around one exact optimization kernel,
//! [`solver`], which minimizes the weighted-L1-penalized check loss by a
//! vertex simplex. On top of it sit the two-stage adaptive estimator
//! ([`adaptive`]), exact change-point search by dynamic programming
//! ([`segmentation`]), the information criterion for the number of
//! change-points ([`selection`]), the comparison estimators
//! ([`baselines`]), seeded data generation ([`simulation`]) and the Monte
//! Carlo harness ([`experiment`], [`metrics`]).

// Index loops mirror the linear algebra; negated comparisons deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod baselines;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod segmentation;
pub mod selection;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};
pub use model::{check_loss, objective_value, Dataset, FitResult, PenaltySpec, QuantileLevel};
