//! Building blocks for communication-efficient distributed Adam.
//!
//! Everything here is pure computation over `alloc` and runs without `std`:
//!
//! * [`linalg`] dense vectors/matrices and the reproducible random stream,
//! * [`quantize`] quantization mappings, their contracts, and the bit-exact
//!   wire codecs,
//! * [`node`] the worker and server state machines (Adam with two-way error
//!   feedback, plus the SGD-with-momentum baseline),
//! * [`transport`] the lockstep parameter-server round engine with bit
//!   accounting,
//! * [`problems`] the stochastic least-squares objective,
//! * [`theory`] closed-form complexity constants and bounds.
//!
//! IO, configuration files, and the experiment driver live in the
//! `effadam-sim` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bits;
pub mod error;
pub mod linalg;
pub mod node;
pub mod problems;
pub mod quantize;
pub mod theory;
pub mod transport;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector, RandomStream};
pub use node::{HyperParams, LocalOptimizer, Schedule, Server, Worker};
pub use problems::{GradientOracle, LeastSquares};
pub use quantize::{QuantizedMessage, QuantizerContract, QuantizerKind};
pub use transport::{BitLedger, Cluster, RoundTrace};
