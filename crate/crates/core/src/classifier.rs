//! Pattern classification: seasonal, sparse or random.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{PatternLabel, TimeSeries};
use crate::smoothing::centered_mean;
use crate::stats;

pub const MIN_LEN: usize = 32;

/// Scale-free summary of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Largest lag autocorrelation of the locally detrended series.
    pub seasonality_strength: f64,
    pub best_period: usize,
    /// Fraction of points equal to the modal value.
    pub sparsity: f64,
    /// Kurtosis of first differences.
    pub spikiness: f64,
    /// R² of a straight-line fit.
    pub trend_strength: f64,
}

pub fn extract_features(x: &TimeSeries) -> Result<FeatureVector> {
    let v = x.values();
    if v.len() < MIN_LEN {
        return Err(Error::TooShort { needed: MIN_LEN, found: v.len() });
    }
    let (seasonality_strength, best_period) = seasonality(v);
    Ok(FeatureVector {
        seasonality_strength,
        best_period,
        sparsity: modal_fraction(v),
        spikiness: diff_kurtosis(v),
        trend_strength: linear_r2(v),
    })
}

/// Harmonics of the true period score almost as high as the period itself;
/// the shortest lag within this fraction of the best wins.
const HARMONIC_TOLERANCE: f64 = 0.9;

/// For each candidate lag `L` the series is detrended with a centred moving
/// average of width `L` (which cancels a period-`L` cycle from the trend but
/// not from the residual), clipped at three robust sigmas, and correlated
/// with itself at lag `L`.
fn seasonality(x: &[f64]) -> (f64, usize) {
    let n = x.len();
    let mut scores = Vec::with_capacity(n / 2);
    let mut scratch = Vec::with_capacity(n);
    for lag in 2..=n / 2 {
        let trend = centered_mean(x, lag);
        let mut y: Vec<f64> = x.iter().zip(&trend).map(|(a, b)| a - b).collect();
        scratch.clear();
        scratch.extend_from_slice(&y);
        scratch.sort_unstable_by(f64::total_cmp);
        let med = stats::median_sorted(&scratch);
        for s in scratch.iter_mut() {
            *s = libm::fabs(*s - med);
        }
        scratch.sort_unstable_by(f64::total_cmp);
        let spread = 3.0 * stats::MAD_SCALE * stats::median_sorted(&scratch);
        if spread > 0.0 {
            for v in y.iter_mut() {
                *v = v.clamp(med - spread, med + spread);
            }
        }
        let m = stats::mean(&y);
        let denom: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
        let r = if denom > 0.0 {
            (0..n - lag).map(|t| (y[t] - m) * (y[t + lag] - m)).sum::<f64>() / denom
        } else {
            0.0
        };
        scores.push(r);
    }
    let best = scores.iter().copied().fold(0.0, f64::max);
    if best <= 0.0 {
        return (0.0, 2);
    }
    // Short lags correlate with any slow cycle; candidates start after the
    // score first turns non-positive.
    let first_dip = scores.iter().position(|r| *r <= 0.0).unwrap_or(0);
    let period = (first_dip..scores.len())
        .find(|&i| {
            let r = scores[i];
            let left = if i > 0 { scores[i - 1] } else { f64::NEG_INFINITY };
            let right = scores.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            r >= HARMONIC_TOLERANCE * best && r >= left && r >= right
        })
        .map(|i| i + 2)
        .unwrap_or(2);
    (best.min(1.0), period)
}

fn modal_fraction(x: &[f64]) -> f64 {
    let s = stats::sorted(x);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let eps = 1e-9 * (hi - lo);
    let mut best = 1;
    let mut start = 0;
    for i in 1..s.len() {
        while s[i] - s[start] > eps {
            start += 1;
        }
        best = best.max(i - start + 1);
    }
    best as f64 / s.len() as f64
}

fn diff_kurtosis(x: &[f64]) -> f64 {
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = stats::mean(&d);
    let m2 = d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m4 = d.iter().map(|v| libm::pow(v - m, 4.0)).sum::<f64>() / d.len() as f64;
    m4 / (m2 * m2)
}

fn linear_r2(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let xm = stats::mean(x);
    let (mut sxy, mut stt, mut sxx) = (0.0, 0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - tm;
        sxy += dt * (v - xm);
        stt += dt * dt;
        sxx += (v - xm) * (v - xm);
    }
    if sxx <= 0.0 || stt <= 0.0 {
        return 0.0;
    }
    (sxy * sxy / (stt * sxx)).clamp(0.0, 1.0)
}

/// Anything that maps features to a pattern label, so a trained model can
/// replace the rule cascade.
pub trait PatternClassifier {
    fn classify(&self, f: &FeatureVector) -> PatternLabel;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleClassifier {
    pub sparsity_min: f64,
    pub seasonality_min: f64,
}

impl Default for RuleClassifier {
    fn default() -> Self {
        RuleClassifier { sparsity_min: 0.8, seasonality_min: 0.5 }
    }
}

impl PatternClassifier for RuleClassifier {
    fn classify(&self, f: &FeatureVector) -> PatternLabel {
        if f.sparsity >= self.sparsity_min {
            PatternLabel::Sparse
        } else if f.seasonality_strength >= self.seasonality_min {
            PatternLabel::Seasonal { period: f.best_period.max(2) }
        } else {
            PatternLabel::Random
        }
    }
}

/// Rule cascade with default thresholds.
pub fn classify(f: &FeatureVector) -> PatternLabel {
    RuleClassifier::default().classify(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values("c", v).unwrap()
    }

    fn fv(strength: f64, sparsity: f64) -> FeatureVector {
        FeatureVector { seasonality_strength: strength, best_period: 24, sparsity, spikiness: 3.0, trend_strength: 0.0 }
    }

    #[test]
    fn sine_period_found() {
        let x: Vec<f64> = (0..480).map(|i| libm::sin(2.0 * PI * i as f64 / 24.0)).collect();
        let f = extract_features(&ts(x)).unwrap();
        assert_eq!(f.best_period, 24);
        assert!(f.seasonality_strength > 0.8, "{f:?}");
        assert_eq!(classify(&f), PatternLabel::Seasonal { period: 24 });
    }

    #[test]
    fn mostly_zero_is_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..400).map(|_| if rng.random::<f64>() < 0.03 { 5.0 * rng.random::<f64>() } else { 0.0 }).collect();
        let f = extract_features(&ts(x)).unwrap();
        assert!(f.sparsity >= 0.95, "{f:?}");
        assert_eq!(classify(&f), PatternLabel::Sparse);
    }

    #[test]
    fn random_walk_is_not_seasonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut level = 0.0;
        let x: Vec<f64> = (0..480)
            .map(|_| {
                level += rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect();
        let f = extract_features(&ts(x)).unwrap();
        assert!(f.seasonality_strength < 0.3, "{f:?}");
        assert!(f.sparsity < 0.5);
        assert_eq!(classify(&f), PatternLabel::Random);
    }

    #[test]
    fn cascade_precedence() {
        assert!(matches!(classify(&fv(0.9, 0.1)), PatternLabel::Seasonal { .. }));
        assert_eq!(classify(&fv(0.9, 0.95)), PatternLabel::Sparse);
        assert_eq!(classify(&fv(0.2, 0.2)), PatternLabel::Random);
    }

    #[test]
    fn features_are_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..200)
            .map(|i| libm::sin(2.0 * PI * i as f64 / 12.0) + 0.2 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 7.5 * v - 3.0).collect();
        let a = extract_features(&ts(x)).unwrap();
        let b = extract_features(&ts(y)).unwrap();
        assert_eq!(classify(&a), classify(&b));
        assert_eq!(a.best_period, b.best_period);
        assert!((a.seasonality_strength - b.seasonality_strength).abs() < 1e-9);
        assert!((a.trend_strength - b.trend_strength).abs() < 1e-9);
    }

    #[test]
    fn short_series_rejected() {
        assert_eq!(extract_features(&ts(vec![1.0; 31])), Err(Error::TooShort { needed: 32, found: 31 }));
        let _ = vec![0];
    }
}
