//! JSON configuration file. Every field is optional.
//!
//! ```json
//! {
//!   "tune": { "lambda": 0.5, "max_evals": 16,
//!             "grids": { "Random": { "window_size": [10, 30] } },
//!             "classifier": { "sparsity_min": 0.8, "seasonality_min": 0.5 } },
//!   "train": { "epochs": 30, "arch": { "width": 32 } },
//!   "train_fraction": 0.3
//! }
//! ```

use std::path::Path;

use autotune_core::eval::DEFAULT_TRAIN_FRACTION;
use autotune_core::shape::TrainConfig;
use autotune_core::tuner::TuneConfig;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tune: TuneConfig,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config { tune: TuneConfig::default(), train: TrainConfig::default(), train_fraction: DEFAULT_TRAIN_FRACTION }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        match path {
            Some(p) => read_json(p),
            None => Ok(Config::default()),
        }
    }
}
