//! Structurally random measurement operators and their statistics.
//!
//! A structurally random operator measures a signal in three steps: a
//! cheap randomizer (sign flips, a permutation, or a random convolution),
//! an orthonormal fast transform, and a random selection of a few output
//! components. This crate implements the operators, the closed-form mean
//! and covariance models of the mixture they produce, concentration bounds
//! on how far a component strays from its model, and a quantization and
//! entropy-coding pipeline whose decoder rebuilds every model from a small
//! amount of side information.
//!
//! Module map:
//!
//! * [`transforms`]: orthonormal WHT / DCT / real-DFT / Kronecker operators
//!   with row introspection and sparse row-product expansions.
//! * [`sensing`]: randomizer draws, mixture vectors, and measurement
//!   selection.
//! * [`moments`]: per-mode mean and covariance models plus normality
//!   diagnostics.
//! * [`tailbounds`]: exceedance bounds and their inversion into quantizer
//!   ranges.
//! * [`quant`]: uniform and Lloyd-Max scalar quantizers designed against a
//!   Gaussian model.
//! * [`linpred`]: model-driven linear prediction across correlated
//!   measurements.
//! * [`coding`]: arithmetic and fixed-length coding, side information, and
//!   the bitstream container.
//! * [`harness`]: Monte Carlo validation drivers and synthetic signals.

pub mod coding;
pub mod error;
mod fft;
pub mod harness;
pub mod linpred;
pub mod math;
pub mod moments;
pub mod quant;
pub mod rng;
pub mod sensing;
pub mod tailbounds;
pub mod transforms;

pub use error::{Error, Result};
