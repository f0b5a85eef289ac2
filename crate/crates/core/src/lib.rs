//! Primal-dual contextual Bayesian optimization with Gaussian-process
//! surrogates, two baseline optimizers, benchmark problems and metrics.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gp;
pub mod grid;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod trace;

pub use error::{Error, Result};
