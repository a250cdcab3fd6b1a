//! Digital twin of an all-optical magnetic perceptron.
//!
//! Synapses are sites on a magnetic film whose written fraction follows a
//! dead-zone / saturation response to helicity-dependent pump packets. Weights
//! are read back through Faraday rotation, a crossed analyzer and a linear
//! camera, and trained with a single-output perceptron rule whose learning
//! rate is either sampled (`simulate`) or realized as jittered pulse packets
//! on the emulated rig (`emulate`).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod export;
pub mod optics;
pub mod pattern;
pub mod rig;
pub mod rng;
pub mod run;
pub mod synapse;
pub mod trainer;
pub mod weights;

pub use error::{Error, Result};
