//! Deterministic simulator for two-way quantized distributed Adam.
//!
//! The numerics live in `effadam-core`; this crate adds run configuration,
//! experiment drivers, file formats and the `effadam` command line.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod theory_report;
pub mod trace;

pub use config::{Algo, RunConfig, Wiring};
pub use error::{Result, SimError};
pub use experiment::{run, run_on, RunSpec, Simulation};
pub use metrics::MetricsRow;
