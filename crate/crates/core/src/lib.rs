//! Discrete event detection in video: regress a smooth per-frame target
//! signal with a small CNN evaluated as a sliding window, then discretise the
//! predicted signal back into event frame numbers.

pub mod cli;
pub mod data;
pub mod discretise;
pub mod error;
pub mod formats;
pub mod labels;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod run_config;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
