//! Gradient-confusion laboratory.
//!
//! Small fully-connected networks with exact per-example backpropagation,
//! the pairwise gradient inner-product statistics built on top of them,
//! constant-step SGD with convergence envelopes, and Monte Carlo estimators
//! for the concentration behaviour of those inner products under random
//! data and random weights.
//!
//! Everything is deterministic given a seed: random draws go through
//! [`numkit::RngStream`], whose streams are addressed by `(seed, stream id)`
//! so that independent trials can run in parallel without changing results.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confusion;
pub mod error;
pub mod exec;
pub mod init;
pub mod model;
pub mod numkit;
pub mod objective;
pub mod sgd;
pub mod theory;

pub use error::{Error, Result};
pub use exec::Execution;
