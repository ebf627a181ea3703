//! Detection of imagined-word segments in continuous multichannel EEG trials.
//!
//! Trials are re-referenced, cut into 0.5 s windows, described by wavelet,
//! EMD, fractal and Hurst features, classified window by window, and the
//! window labels are reduced to 0.1 s bins before scoring.

pub mod data;
pub mod decompose;
pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod pipeline;
pub mod postprocess;
pub mod preprocess;
pub mod seed;

pub use error::{Error, Result};
