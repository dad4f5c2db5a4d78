//! Lack-of-fit testing for linear quantile regression.
//!
//! The centerpiece is a specification test that aggregates cumulative sums of
//! signed residuals over one-dimensional projections of the covariates, which
//! keeps its power when the covariate dimension grows. Calibration uses a
//! wild bootstrap with two-point multipliers whose tau-quantile is zero, so
//! heteroscedastic errors need no density estimation. A classical
//! componentwise half-space test is included as a benchmark, along with a
//! Monte Carlo sphere-integration oracle, a simulation laboratory, and CSV /
//! JSON interfaces for the command-line front end.
//!
//! The `parallel` feature (default) runs bootstrap replications, simulation
//! replications, and weight-matrix assembly on rayon; disabling it yields a
//! dependency-free sequential build with bit-identical results.

pub mod bootstrap;
pub mod data;
pub mod dataset;
pub mod error;
pub mod halfspace;
pub mod linalg;
mod parallel;
pub mod problem;
pub mod projection;
pub mod qreg;
pub mod report;
mod rng;
pub mod sim;

pub use bootstrap::{run_test, BootstrapConfig, StatisticKind, TestReport};
pub use data::DataSample;
pub use error::{QrlofError, Result};
pub use problem::{run_problem, run_problem_with_weights, ProblemSpec};
pub use qreg::{fit_linear_quantile, QuantileFit};
