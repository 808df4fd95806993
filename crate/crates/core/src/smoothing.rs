//! Anomaly-robust smoothing used to build the prediction target.
//!
//! Forecast quality is judged against a smoothed copy of the series rather
//! than the raw values, so a model that chases spikes is penalised instead of
//! rewarded. Extremes are first replaced by their neighbours, then an
//! optional centred moving average removes the remaining jitter.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothStrategy {
    None,
    Filter,
    FilterMA,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothConfig {
    pub strategy: SmoothStrategy,
    /// Robust-deviation multiplier for the extreme-value filter.
    pub filter_k: f64,
    /// Odd, centred moving-average window.
    pub ma_window: usize,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig { strategy: SmoothStrategy::FilterMA, filter_k: 3.0, ma_window: 5 }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.filter_k > 0.0) {
            return Err(Error::InvalidParam {
                name: "filter_k".into(),
                reason: "must be positive".into(),
            });
        }
        if self.ma_window < 3 || self.ma_window.is_multiple_of(2) {
            return Err(Error::InvalidParam {
                name: "ma_window".into(),
                reason: "must be an odd integer >= 3".into(),
            });
        }
        Ok(())
    }
}

/// Replaces points far from the median by the median of their nearest
/// non-extreme neighbours.
///
/// The deviation scale is `1.4826 * MAD`; when the MAD is zero the IQR
/// (scaled to a normal sigma) is used. When both vanish every point that
/// differs from the median at all counts as extreme, which is what a
/// constant-majority series with a lone spike needs.
pub fn filter_extremes(x: &[f64], k: f64) -> Result<Vec<f64>> {
    if x.len() < 3 {
        return Err(Error::TooShort { needed: 3, found: x.len() });
    }
    let med = stats::median(x);
    let mut scale = stats::MAD_SCALE * stats::mad(x);
    if scale == 0.0 {
        scale = stats::iqr(x) / 1.349;
    }
    let extreme: Vec<bool> = x.iter().map(|v| libm::fabs(v - med) > k * scale).collect();
    let mut out = x.to_vec();
    for i in (0..x.len()).filter(|&i| extreme[i]) {
        let left = (0..i).rev().find(|&j| !extreme[j]).map(|j| x[j]);
        let right = (i + 1..x.len()).find(|&j| !extreme[j]).map(|j| x[j]);
        out[i] = match (left, right) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => med,
        };
    }
    Ok(out)
}

/// Centred moving average; edges use the truncated window.
pub fn moving_average(x: &[f64], w: usize) -> Result<Vec<f64>> {
    if w == 0 || w.is_multiple_of(2) {
        return Err(Error::InvalidParam { name: "window".into(), reason: "must be odd".into() });
    }
    if w > x.len() {
        return Err(Error::WindowTooLarge { window: w, len: x.len() });
    }
    Ok(centered_mean(x, w))
}

/// Centred mean with truncated edges. Even windows lean one point left.
pub(crate) fn centered_mean(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let half = w / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + w - half).min(n);
            let hi = hi.max(lo + 1);
            // Summing the slice directly keeps constant inputs exact.
            if hi - lo <= 16 {
                x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect()
}

pub fn smooth(x: &TimeSeries, cfg: &SmoothConfig) -> Result<Vec<f64>> {
    smooth_values(x.values(), cfg)
}

pub fn smooth_values(x: &[f64], cfg: &SmoothConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    match cfg.strategy {
        SmoothStrategy::None => Ok(x.to_vec()),
        SmoothStrategy::Filter => filter_extremes(x, cfg.filter_k),
        SmoothStrategy::FilterMA => {
            let filtered = filter_extremes(x, cfg.filter_k)?;
            moving_average(&filtered, cfg.ma_window)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn filter_examples() {
        assert_eq!(filter_extremes(&[1.0, 1.0, 100.0, 1.0, 1.0], 3.0).unwrap(), vec![1.0; 5]);
        let ramp = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(filter_extremes(&ramp, 3.0).unwrap(), ramp.to_vec());
        assert_eq!(filter_extremes(&[4.0; 6], 3.0).unwrap(), vec![4.0; 6]);
        assert_eq!(filter_extremes(&[1.0, 2.0], 3.0), Err(Error::TooShort { needed: 3, found: 2 }));
    }

    #[test]
    fn filter_edge_uses_single_side() {
        // spike at the first point: replaced by its right neighbour only
        let out = filter_extremes(&[50.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 3.0).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(&out[1..], &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0], 3).unwrap(), vec![1.5, 2.0, 2.5]);
        assert_eq!(moving_average(&[0.0, 3.0, 0.0], 3).unwrap(), vec![1.5, 1.0, 1.5]);
        assert_eq!(moving_average(&[7.5; 9], 5).unwrap(), vec![7.5; 9]);
        assert_eq!(moving_average(&[1.0, 2.0], 3), Err(Error::WindowTooLarge { window: 3, len: 2 }));
    }

    #[test]
    fn smooth_strategies() {
        let ts = TimeSeries::from_values("s", vec![1.0, 1.0, 100.0, 1.0, 1.0]).unwrap();
        let none = SmoothConfig { strategy: SmoothStrategy::None, ..Default::default() };
        assert_eq!(smooth(&ts, &none).unwrap(), ts.values().to_vec());
        let filt = SmoothConfig { strategy: SmoothStrategy::Filter, ..Default::default() };
        assert_eq!(smooth(&ts, &filt).unwrap(), vec![1.0; 5]);
        let bad = SmoothConfig { ma_window: 4, ..Default::default() };
        assert!(smooth(&ts, &bad).is_err());
    }

    #[test]
    fn filter_ma_pulls_spiked_sine_toward_base() {
        let base: Vec<f64> =
            (0..240).map(|i| libm::sin(2.0 * core::f64::consts::PI * i as f64 / 48.0)).collect();
        let mut x = base.clone();
        x[100] += 10.0;
        let ts = TimeSeries::from_values("s", x.clone()).unwrap();
        let sm = smooth(&ts, &SmoothConfig::default()).unwrap();
        let err = |y: &[f64]| y.iter().zip(&base).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
        assert!(err(&sm) < err(&x));
    }

    proptest! {
        #[test]
        fn ma_within_range(x in proptest::collection::vec(-1e3f64..1e3, 3..80), half in 1usize..5) {
            let w = (2 * half + 1).min(if x.len() % 2 == 1 { x.len() } else { x.len() - 1 });
            let y = moving_average(&x, w).unwrap();
            let (lo, hi) = stats::min_max(&x);
            for v in y {
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }

        #[test]
        fn filter_idempotent_without_spikes(x in proptest::collection::vec(-5.0f64..5.0, 12..60)) {
            let once = filter_extremes(&x, 3.0).unwrap();
            prop_assume!(once == x);
            prop_assert_eq!(filter_extremes(&once, 3.0).unwrap(), once);
        }
    }
}
