//! Human activity recognition from tracked skeleton joint sequences.
//!
//! Recordings are parsed ([`dataset`]), normalised to a fixed frame count
//! and balanced with Gaussian noise ([`preprocess`]), classified by a small
//! convolutional network over the joint-time plane ([`network`]) trained
//! with Adam ([`optim`]), and scored with accuracy, a confusion matrix and
//! the Fowlkes-Mallows index ([`metrics`]). [`harness`] ties the pieces
//! into training runs, sweeps and reports.

pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod preprocess;
pub mod registry;
pub mod tensor;

pub use error::{Error, Result};
