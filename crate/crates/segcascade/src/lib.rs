//! Discriminative segmental cascades for phonetic recognition.
//!
//! The crate builds segment lattices over frame label posteriors, scores
//! them with linear segment features, decodes and prunes them with exact
//! max-marginal inference, and trains multi-pass cascades in which each pass
//! prunes the hypothesis space handed to a richer successor.

pub mod acoustics;
pub mod cascade;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod inference;
pub mod lattice;
pub mod pruning;
pub mod scoring;
pub mod synth;
pub mod training;

pub use error::{Error, Result};

/// Denominator guard shared by every AdaGrad update in the crate.
pub(crate) const ADAGRAD_EPS: f64 = 1e-8;
