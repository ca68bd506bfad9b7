//! Training and evaluation toolkit for gender-debiased recurrent language
//! models.
//!
//! The crate covers the full pipeline: corpus preparation with optional
//! counterfactual augmentation ([`corpus`]), an LSTM language model with exact
//! gradients ([`model`]), training with a pair-equalizing bias loss or an
//! embedding projection penalty ([`training`]), ancestral sampling
//! ([`generation`]) and the bias metric suite ([`metrics`]).

pub mod corpus;
pub mod data;
pub mod error;
pub mod generation;
pub mod metrics;
pub mod model;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
