//! Moving-average detector for random-walk-like series.

use alloc::vec::Vec;

use super::space::{Average, RandomParams};
use super::{trailing_scale, Band};
use crate::error::{Error, Result};
use crate::series::{DetectionOutcome, TimeSeries};
use crate::stats;

pub fn detect_random(x: &TimeSeries, params: &RandomParams) -> Result<DetectionOutcome> {
    band(x.values(), params)?.outcome(x.values(), params.threshold)
}

pub(crate) fn band(x: &[f64], params: &RandomParams) -> Result<Band> {
    let n = x.len();
    let w = params.window_size;
    if w == 0 || w >= n {
        return Err(Error::WindowTooLarge { window: w, len: n });
    }
    let forecast = trailing_average(x, w, params.average);
    let residuals: Vec<f64> = x.iter().zip(&forecast).map(|(v, f)| v - f).collect();
    let scale = trailing_scale(x, &residuals, w);
    Ok(Band::symmetric(forecast, scale))
}

/// Average of the `w` points before each index; shorter prefixes at the
/// start, and the first point forecasts itself.
fn trailing_average(x: &[f64], w: usize, average: Average) -> Vec<f64> {
    let mut scratch = Vec::with_capacity(w);
    (0..x.len())
        .map(|i| {
            if i == 0 {
                return x[0];
            }
            let win = &x[i.saturating_sub(w)..i];
            match average {
                Average::Mean => stats::mean(win),
                Average::Median => {
                    scratch.clear();
                    scratch.extend_from_slice(win);
                    scratch.sort_unstable_by(f64::total_cmp);
                    stats::median_sorted(&scratch)
                }
            }
        })
        .collect()
}
