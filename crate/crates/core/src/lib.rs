//! Average treatment effect estimation under unconfoundedness, with the
//! supplementary credibility analyses a careful write-up should report:
//! overlap diagnostics via variance-bound comparison, covariate-split
//! sensitivity, half-sample bias checks, and a bias-function summary.
//!
//! The numeric kernels ([`linalg`], [`linmod`], [`forest`], [`balance`]) are
//! generic over the [`num::Scalar`] trait (`f32`/`f64`); the statistical layer
//! works in `f64` through the aliases below.

pub mod balance;
pub mod error;
pub mod estimators;
pub mod forest;
pub mod linalg;
pub mod linmod;
pub mod dataio;
pub mod diagnostics;
pub mod model;
pub mod num;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    Dataset, Estimand, Method, NuisanceEstimates, NuisanceFamily, PointEstimate, RunConfig,
};

/// Concrete `f64` instantiations of the generic kernels.
pub type Matrix = linalg::Matrix<f64>;
pub type LinearFit = linmod::LinearFit<f64>;
pub type CvResult = linmod::CvResult<f64>;
pub type Forest = forest::Forest<f64>;
pub type BalanceSolution = balance::BalanceSolution<f64>;
