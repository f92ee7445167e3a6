//! Change-point and two-sample mean tests for functional data in which the
//! number of principal-component projections grows with the sample size.
//!
//! The crate is organised bottom-up:
//!
//! - [`curves`]: grids, quadrature, discretized curves and covariance surfaces.
//! - [`fpca`]: eigendecomposition of covariance surfaces and principal-component scores.
//! - [`limitdist`]: Monte Carlo simulation of the limit law of the Cramér–von-Mises
//!   functional of the two-parameter Gaussian limit process.
//! - [`changepoint`]: CUSUM processes, the change-point tests, the change-point
//!   estimator and binary segmentation.
//! - [`twosample`]: the pooled-covariance two-sample mean test.
//! - [`simharness`]: Brownian-motion simulation of size and power.
//! - [`ingest`] and [`cli`]: file formats, Fourier smoothing and the command-line front end.

pub mod changepoint;
pub mod cli;
pub mod curves;
mod error;
pub mod fpca;
pub mod ingest;
mod linalg;
pub mod limitdist;
pub mod report;
pub mod rng;
pub mod simharness;
pub mod twosample;

pub use error::{Error, Result};
