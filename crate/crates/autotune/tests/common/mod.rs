#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use autotune_core::shape::synth::default_specs;
use autotune_core::shape::{synth_corpus, train_scorer, Architecture, ScorerModel, TrainConfig};
use autotune_core::TimeSeries;

pub fn quick_train() -> TrainConfig {
    TrainConfig { arch: Architecture { width: 16, conv1: 4, conv2: 8, hidden: 16 }, epochs: 4, ..TrainConfig::default() }
}

pub const QUICK_CONFIG: &str = r#"{"train":{"epochs":4,"arch":{"width":16,"conv1":4,"conv2":8,"hidden":16}}}"#;

/// Small scorer trained once per test binary.
pub fn quick_model() -> ScorerModel {
    static MODEL: OnceLock<ScorerModel> = OnceLock::new();
    MODEL.get_or_init(|| train_scorer(&synth_corpus(&default_specs(45, 3), 4), &quick_train()).unwrap()).clone()
}

/// Period-24 sine with three large spikes.
pub fn sine_with_spikes(n: usize) -> TimeSeries {
    let mut v: Vec<f64> = (0..n).map(|i| 10.0 + 2.0 * (2.0 * PI * i as f64 / 24.0).sin() + 0.05 * ((i * 7919) % 13) as f64 / 13.0).collect();
    for &i in &[n / 4, n / 2, 3 * n / 4] {
        v[i] += 8.0;
    }
    TimeSeries::from_values("sine", v).unwrap()
}

pub fn csv_of(x: &TimeSeries) -> String {
    let mut buf = Vec::new();
    autotune::ingest::write_csv(x, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}
