//! Logic Explained Networks for multi-label text classification.
//!
//! The crate covers the whole pipeline: bag-of-words concept encoding
//! ([`data`]), the entropy-gated network and its α importance scores
//! ([`neural`]), first-order logic formulas over concept predicates
//! ([`logic`]), local and global explanation extraction including the
//! perturbation-based good/bad term split and power-set aggregation
//! ([`explain`]), a random-forest black box ([`blackbox`]), a linear
//! surrogate baseline ([`surrogate`]), explanation-quality metrics
//! ([`metrics`]) and the biased-model detection experiment ([`bias`]).
//!
//! Every model exposes class probabilities through [`Predictor`]; explainers
//! and metrics only ever talk to that trait.

pub mod bias;
pub mod blackbox;
pub mod data;
mod error;
pub mod experiment;
pub mod explain;
pub mod logic;
pub mod metrics;
pub mod neural;
mod predictor;
pub mod rng;
pub mod surrogate;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use predictor::{binarize, flip, Predictor};

/// Truth threshold of a concept predicate: `x_j` holds iff `x_j > THETA`.
pub const THETA: f64 = 0.5;
