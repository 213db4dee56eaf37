//! Novelty detection for multiclass problems in which whole classes are
//! missing from training.
//!
//! The crate provides the raw confidence-ratio score of a set of points, an
//! ensemble of known-vs-novel classifiers trained on artificial splits of
//! the training classes, the comparison baselines, and the ROC evaluation
//! harness with class-held-out cross-validation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod benchmark;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod rawscore;
pub mod rng;
pub mod softlabel;

pub use error::{Error, Result};
