//! APARCH(1,1) volatility modelling with standardized Pearson type IV
//! innovations.
//!
//! The crate is layered bottom-up:
//!
//! - [`special`]: gamma-ratio magnitudes, the Gauss hypergeometric function
//!   with complex parameters and adaptive Gauss–Kronrod quadrature.
//! - [`spiv`]: the standardized Pearson type IV distribution (zero mean,
//!   unit variance).
//! - [`aparch`]: the volatility filter, likelihood, constrained maximum
//!   likelihood fit with QML sandwich errors, and simulation.
//! - [`diagnostics`]: stylized-fact statistics and volatility loss functions.
//! - [`risk`]: Value-at-Risk, the backtesting battery and tail measures.
//! - [`data_io`]: price ingestion, return construction and JSON reports.
//! - [`cli`]: the command-line driver.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aparch;
pub mod cli;
pub mod data_io;
pub mod diagnostics;
pub mod error;
pub mod optim;
pub mod risk;
pub mod special;
pub mod spiv;
mod stats;

pub use aparch::{AparchParams, FilterState, FitOptions, FitResult};
pub use error::{Error, Result};
pub use spiv::SpivParams;
