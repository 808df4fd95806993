//! File formats, job store, HTTP API and command line for the autotune
//! anomaly detection engine in `autotune_core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod http;
pub mod ingest;
pub mod service;
pub mod store;
pub mod svg;

pub use error::{AppError, Result};
