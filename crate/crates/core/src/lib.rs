//! Generalized covariance thresholding for sparse PCA.
//!
//! A spiked covariance model with a sparse spike, kernel matrices
//! `K(f)_ij = f(sqrt(n) Y_ij) / sqrt(n)`, the asymptotic theory of their
//! spectrum (bulk edge, outlier, overlap, phase transitions) and a Monte
//! Carlo harness that compares the two.
//!
//! - [`model`]: spike priors and fast spiked sample covariances.
//! - [`kernels`]: kernels with their Hermite expansions.
//! - [`theory`]: bulk law, spike limits, transition curves.
//! - [`estimator`]: kernel matrices, eigensolvers, detection, support recovery.
//! - [`harness`]: experiment configs, parallel runs, CSV and JSON output.

// NaN must fail validation, so `!(x > 0.0)` is intended throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernels;
pub mod model;
pub mod rng;
pub mod theory;

pub use error::{GctError, Result};
