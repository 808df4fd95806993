//! Self-tuning univariate anomaly detection.
//!
//! The engine classifies a series, picks a detector, tunes its parameters
//! against a learned boundary-shape score, a forecast-error score and a
//! target anomaly ratio, and applies user fine-tuning to cached results.
//! Everything here is pure computation over in-memory data and builds
//! without `std`; file formats, the CLI and the HTTP service live in the
//! `autotune` crate.

#![no_std]
// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classifier;
pub mod detectors;
pub mod error;
pub mod eval;
pub mod finetune;
pub mod metrics;
pub mod sensitivity;
pub mod series;
pub mod shape;
pub mod smoothing;
pub mod stats;
pub mod tuner;

pub use error::{Error, Result};
pub use series::{
    to_mask, AnomalyMask, Boundary, DetectionOutcome, Method, ParamSet, ParamValue, PatternLabel,
    SensitivityTarget, TimeSeries,
};
