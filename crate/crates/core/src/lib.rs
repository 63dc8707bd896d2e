//! Sampling-rate-robust activity recognition: a small reverse-mode
//! autodiff engine, anti-aliased resampling, corpus handling, the
//! encoder/classifier/discriminator model, adversarial training, and an
//! experiment harness.

pub mod adversary;
pub mod data;
pub mod error;
pub mod grad;
pub mod harness;
pub mod models;
pub mod seed;
pub mod sigproc;

pub use error::{Error, Result};
