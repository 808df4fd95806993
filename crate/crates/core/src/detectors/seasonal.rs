//! Seasonal decomposition detector.
//!
//! The seasonal estimate at a point is the median of the same phase over the
//! previous `seasonal_w` periods; the first period, having no past, looks at
//! the following periods instead. A
//! centred moving average of the de-seasonalised series (extremes filtered
//! out first) supplies the trend,
//! and the boundary is a robust Gaussian band on the trailing residuals.

use alloc::vec::Vec;

use super::space::SeasonalParams;
use super::{trailing_scale, Band};
use crate::error::{Error, Result};
use crate::series::{DetectionOutcome, TimeSeries};
use crate::smoothing::{centered_mean, filter_extremes};
use crate::stats;

/// Spikes in the de-seasonalised series are filtered before the trend
/// average so one anomaly does not leak into its neighbours' forecasts.
const TREND_FILTER_K: f64 = 3.0;

pub fn detect_seasonal(x: &TimeSeries, params: &SeasonalParams) -> Result<DetectionOutcome> {
    band(x.values(), params)?.outcome(x.values(), params.threshold)
}

pub(crate) fn band(x: &[f64], p: &SeasonalParams) -> Result<Band> {
    let n = x.len();
    if p.period < 2 || p.seasonal_w == 0 || p.period.saturating_mul(p.seasonal_w) > n {
        return Err(Error::PeriodTooLarge { period: p.period, seasons: p.seasonal_w, len: n });
    }
    if p.trend_w > n {
        return Err(Error::WindowTooLarge { window: p.trend_w, len: n });
    }
    if p.resid_w >= n {
        return Err(Error::WindowTooLarge { window: p.resid_w, len: n });
    }
    let seasonal = seasonal_component(x, p.period, p.seasonal_w);
    let deseasoned: Vec<f64> = x.iter().zip(&seasonal).map(|(v, s)| v - s).collect();
    let trend = centered_mean(&filter_extremes(&deseasoned, TREND_FILTER_K)?, p.trend_w);
    let forecast: Vec<f64> = seasonal.iter().zip(&trend).map(|(s, t)| s + t).collect();
    let residuals: Vec<f64> = x.iter().zip(&forecast).map(|(v, f)| v - f).collect();
    let scale = trailing_scale(x, &residuals, p.resid_w);
    Ok(Band::symmetric(forecast, scale))
}

fn seasonal_component(x: &[f64], period: usize, seasons: usize) -> Vec<f64> {
    let mut past = Vec::with_capacity(seasons);
    (0..x.len())
        .map(|i| {
            past.clear();
            past.extend((1..=seasons).map_while(|k| i.checked_sub(k * period)).map(|j| x[j]));
            if past.is_empty() {
                past.extend((1..=seasons).map(|k| i + k * period).filter(|&j| j < x.len()).map(|j| x[j]));
            }
            if past.is_empty() {
                x[i]
            } else {
                past.sort_unstable_by(f64::total_cmp);
                stats::median_sorted(&past)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{prediction_error, MetricKind};
    use alloc::vec;
    use core::f64::consts::PI;

    fn sine(n: usize, period: usize) -> Vec<f64> {
        (0..n).map(|i| libm::sin(2.0 * PI * i as f64 / period as f64)).collect()
    }

    fn p(period: usize) -> SeasonalParams {
        SeasonalParams { period, seasonal_w: 2, trend_w: 5, resid_w: 30, threshold: 3.0 }
    }

    fn mape_after_first_period(x: &[f64], period: usize, declared: usize) -> f64 {
        let ts = TimeSeries::from_values("s", x.to_vec()).unwrap();
        let out = detect_seasonal(&ts, &p(declared)).unwrap();
        let f = out.forecast.unwrap();
        prediction_error(MetricKind::MAPE, &x[period..], &f[period..]).unwrap()
    }

    #[test]
    fn pure_sine_is_reproduced() {
        let x = sine(240, 24);
        assert!(mape_after_first_period(&x, 24, 24) < 5.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + 5.0).collect();
        assert!(mape_after_first_period(&shifted, 24, 24) < 5.0);
    }

    #[test]
    fn misdeclared_period_forecasts_worse() {
        let x: Vec<f64> = sine(240, 24).iter().map(|v| v + 5.0).collect();
        let right = mape_after_first_period(&x, 25, 24);
        let wrong = mape_after_first_period(&x, 25, 25);
        assert!(wrong > right, "wrong {wrong} right {right}");
    }

    #[test]
    fn spike_on_sine_is_the_only_anomaly() {
        let mut x = sine(240, 24);
        x[150] += 5.0;
        let ts = TimeSeries::from_values("s", x).unwrap();
        let out = detect_seasonal(&ts, &SeasonalParams { seasonal_w: 3, ..p(24) }).unwrap();
        assert_eq!(out.anomalies.indices().collect::<Vec<_>>(), vec![150]);
    }

    #[test]
    fn first_period_borrows_later_periods() {
        let s = seasonal_component(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 3, 2);
        assert_eq!(s, vec![5.5, 5.0, 6.0, 1.0, 2.0, 3.0, 2.5]);
        assert_eq!(seasonal_component(&[1.0, 2.0], 3, 1), vec![1.0, 2.0]);
    }

    #[test]
    fn size_errors() {
        let ts = TimeSeries::from_values("s", sine(40, 12)).unwrap();
        assert!(matches!(
            detect_seasonal(&ts, &SeasonalParams { seasonal_w: 4, ..p(12) }),
            Err(Error::PeriodTooLarge { .. })
        ));
        assert!(matches!(
            detect_seasonal(&ts, &SeasonalParams { resid_w: 40, ..p(12) }),
            Err(Error::WindowTooLarge { .. })
        ));
    }
}
