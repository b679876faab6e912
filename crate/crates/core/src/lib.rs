//! Deterministic multi-omics binary classification pipeline.
//!
//! The crate ingests tab-separated feature matrices (expression,
//! methylation, copy number, or anything else rectangular), selects
//! informative features with classical statistics, compresses each matrix
//! with a single-hidden-layer autoencoder, fuses the latent blocks, evens
//! out class imbalance with an adversarially trained sampler, and fits a
//! small dense classifier whose evaluation report includes confusion
//! counts, threshold metrics, and the ROC curve.
//!
//! Everything is seeded: the same configuration and seed produce
//! byte-identical artifacts, whether the stages run in one process or are
//! resumed one at a time from disk. Heavy loops are data-parallel when the
//! `parallel` feature (on by default) is enabled, and the parallel and
//! sequential paths produce bit-identical results.

pub mod autoencoder;
pub mod classifier;
pub mod error;
pub mod featsel;
pub mod gan;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scaler;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::RngHandle;
