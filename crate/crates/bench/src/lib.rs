//! Benchmark harness for `pdcbo-core`: TOML experiment configs, seeded
//! replication in a worker pool, CSV traces, aggregate curves and SVG
//! figures.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod config;
pub mod error;
pub mod figures;
pub mod report;
pub mod suite;
pub mod tracefile;

pub use error::{BenchError, Result};
