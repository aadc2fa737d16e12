//! Entropy-difference EEG channel selection and the ADHD-detection pipeline
//! built around it.

pub mod classifiers;
pub mod dwt;
pub mod emd;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ranking;
pub mod signal;
pub mod slbp;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
