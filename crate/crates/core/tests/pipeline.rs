use std::f64::consts::PI;

use autotune_core::detectors::{detect, DetectorParams, ParamSpace};
use autotune_core::eval::{evaluate, split};
use autotune_core::sensitivity::{threshold_curve, SensitivityConfig};
use autotune_core::shape::synth::eval_suite;
use autotune_core::shape::ShapeScorer;
use autotune_core::tuner::{auto, TuneConfig};
use autotune_core::{Method, PatternLabel, Result, SensitivityTarget, TimeSeries};

/// Prefers narrow bands that stay ordered.
struct Narrow;

impl ShapeScorer for Narrow {
    fn score(&self, x: &[f64], u: &[f64], l: &[f64]) -> Result<f64> {
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let width = u.iter().zip(l).map(|(a, b)| a - b).sum::<f64>() / u.len() as f64;
        Ok(1.0 / (1.0 + width / (hi - lo).max(1e-9)))
    }
}

fn sine_spikes() -> TimeSeries {
    let mut v: Vec<f64> = (0..600).map(|i| 5.0 + (2.0 * PI * i as f64 / 24.0).sin() + 0.02 * ((i * 37) % 11) as f64).collect();
    for i in [150, 330, 510] {
        v[i] += 6.0;
    }
    TimeSeries::from_values("sine", v).unwrap()
}

#[test]
fn sine_with_spikes_is_seasonal_and_flags_spikes() {
    let r = auto(&sine_spikes(), SensitivityTarget::new(0.01).unwrap(), &Narrow, &TuneConfig::default()).unwrap();
    assert_eq!(r.label, PatternLabel::Seasonal { period: 24 });
    assert_eq!(r.report.method, Method::Seasonal);
    for i in [150, 330, 510] {
        assert!(r.outcome.anomalies.is_set(i), "spike {i}");
    }
    assert!(r.outcome.forecast.is_some());
}

#[test]
fn bursty_zero_series_takes_evt_path() {
    let v: Vec<f64> = (0..400).map(|i| if i % 20 == 7 { 1.0 + (i % 3) as f64 } else { 0.0 }).collect();
    let x = TimeSeries::from_values("bursts", v).unwrap();
    let r = auto(&x, SensitivityTarget::DEFAULT, &Narrow, &TuneConfig::default()).unwrap();
    assert_eq!(r.label, PatternLabel::Sparse);
    assert!(r.outcome.forecast.is_none());
    assert!(r.outcome.boundary.upper.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn threshold_curve_hand_example() {
    // deviations 5, 3, 1 about a flat forecast with unit residual scale
    let mut v = vec![0.0; 200];
    for (k, &i) in [100usize, 150, 190].iter().enumerate() {
        v[i] = [5.0, 3.0, 1.0][k];
    }
    let x = TimeSeries::from_values("d", v).unwrap();
    let ps = ParamSpace::for_method(Method::Sparse).defaults(None);
    let params = DetectorParams::try_from(&ps).unwrap();
    let grid = SensitivityConfig::default().grid().unwrap();
    let curve = threshold_curve(&x, &params, &grid).unwrap();
    assert!(curve.points().windows(2).all(|w| w[1].p <= w[0].p));
    let last = curve.points().last().unwrap();
    assert_eq!(last.p, detect(&x, &params.with_threshold(last.t)).unwrap().realized_ratio);
}

#[test]
fn evaluation_is_deterministic_and_complete() {
    let suite = eval_suite(6, 11);
    let cfg = TuneConfig::default();
    let a = evaluate(&suite, &Narrow, &cfg, 0.3).unwrap();
    assert_eq!(a, evaluate(&suite, &Narrow, &cfg, 0.3).unwrap());
    assert_eq!(a.rows.len(), 6);
    for (row, x) in a.rows.iter().zip(&suite) {
        assert_eq!(row.id, x.id());
        let (_, test) = split(x, 0.3).unwrap();
        assert!(test.len() >= 400);
    }
}
