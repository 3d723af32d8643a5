//! Deterministic numerical kernel: dense matrices, seeded random streams,
//! samplers, operator norms, a finite-difference gradient oracle and
//! Gaussian kernel density estimation.

mod diff;
mod kde;
mod matrix;
mod norm;
mod rng;
mod sample;
pub mod vector;

pub use diff::finite_diff_grad;
pub use kde::{kde, silverman_bandwidth, DensityEstimate};
pub use matrix::Matrix;
pub use norm::{operator_norm, PowerIteration};
pub use rng::RngStream;
pub use sample::{
    sample_gaussian_matrix, sample_in_ball, sample_orthogonal, sample_unit_sphere,
};
