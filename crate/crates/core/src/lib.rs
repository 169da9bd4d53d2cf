//! Multimodal violent-scene detection.
//!
//! Four feature channels (audio MFCCs, blood-color statistics, codec motion
//! histograms, precomputed concept scores) each feed a calibrated binary SVM.
//! Per-class convex weights fuse the channel probabilities into one score per
//! violence class.

pub mod audio;
pub mod blood;
pub mod concepts;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod motion;
pub mod svm;
pub mod types;

pub use error::{Error, Result};
