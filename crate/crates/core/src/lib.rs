//! Diffusion index forecasting with possibly weak factor loadings.
//!
//! The crate is organised around six building blocks:
//!
//! - [`spectra`]: the scaled SVD of a predictor panel and the implicit
//!   shrinkage each forecaster applies to its singular values.
//! - [`forecasters`]: PCA, ridge and random-projection forecasts, plus the
//!   variants with an always-included unpenalized regressor block.
//! - [`simulation`]: the weak-loading factor DGP and its Monte Carlo study.
//! - [`evaluation`]: MSFE, Diebold–Mariano statistics and win rates.
//! - [`ingest`]: FRED-MD/FRED-QD style CSV parsing, transform codes and
//!   rolling design windows.
//! - [`rng`]: seed derivation so that every random stream is a pure function
//!   of `(seed, index)`.

// `!(x > 0.0)` and friends are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod forecasters;
pub mod ingest;
pub mod linalg;
pub mod rng;
pub mod simulation;
pub mod spectra;

pub use error::{Error, Result};
