//! Peaks-over-threshold detector for sparse series.
//!
//! Each tail is handled on its own: an initial threshold at a high quantile,
//! a Generalized Pareto fit to the excesses above it, and a base boundary at
//! the fitted quantile for the requested exceedance probability. The
//! `threshold` parameter then stretches the distance between the two.

use alloc::string::String;
use alloc::vec::Vec;

use super::space::SparseParams;
use super::Band;
use crate::error::{Error, Result};
use crate::series::{DetectionOutcome, TimeSeries};
use crate::stats;

pub const MIN_LEN: usize = 100;
pub const MIN_EXCESSES: usize = 8;

/// Generalized Pareto shape `xi` and scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    pub shape: f64,
    pub scale: f64,
}

impl GpdFit {
    /// Excess `y` with `P(Y > y) = prob`.
    pub fn quantile(&self, prob: f64) -> f64 {
        if libm::fabs(self.shape) < 1e-9 {
            -self.scale * libm::log(prob)
        } else {
            self.scale / self.shape * (libm::pow(prob, -self.shape) - 1.0)
        }
    }
}

/// Method-of-moments fit, with probability-weighted moments when the
/// moment estimate is unusable. `None` means the excesses are degenerate.
pub fn fit_gpd(excesses: &[f64]) -> Option<GpdFit> {
    let n = excesses.len();
    if n < 2 {
        return None;
    }
    let m = stats::mean(excesses);
    let var = excesses.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1) as f64;
    if m > 0.0 && var > 0.0 && var.is_finite() {
        let r = m * m / var;
        let fit = GpdFit { shape: 0.5 * (1.0 - r), scale: 0.5 * m * (r + 1.0) };
        if fit.scale > 0.0 && fit.scale.is_finite() {
            return Some(fit);
        }
    }
    pwm_fit(excesses)
}

fn pwm_fit(excesses: &[f64]) -> Option<GpdFit> {
    let s = stats::sorted(excesses);
    let n = s.len() as f64;
    let b0 = stats::mean(&s);
    // unbiased estimate of E[Y (1 - F(Y))]
    let b1 = s.iter().enumerate().map(|(i, y)| (n - 1.0 - i as f64) / (n - 1.0) * y).sum::<f64>() / n;
    let denom = b0 - 2.0 * b1;
    if !(denom > 0.0) {
        return None;
    }
    let k = b0 / denom - 2.0;
    let scale = 2.0 * b0 * b1 / denom;
    (scale > 0.0 && scale.is_finite()).then_some(GpdFit { shape: -k, scale })
}

/// Initial threshold and base boundary of the upper tail of `x`.
fn fit_tail(x: &[f64], trunc_quantile: f64, init_ratio: f64, notes: &mut Vec<String>, side: &str) -> (f64, f64) {
    let sorted = stats::sorted(x);
    let tau = stats::quantile_sorted(&sorted, trunc_quantile);
    let excesses: Vec<f64> = sorted.iter().filter(|v| **v > tau).map(|v| v - tau).collect();
    let empirical = || stats::quantile_sorted(&sorted, 1.0 - init_ratio).max(tau);
    if excesses.len() < MIN_EXCESSES {
        notes.push(alloc::format!(
            "{side} tail: {} excesses above {tau}, using empirical quantile",
            excesses.len()
        ));
        return (tau, empirical());
    }
    match fit_gpd(&excesses) {
        Some(fit) => {
            let prob = init_ratio * x.len() as f64 / excesses.len() as f64;
            let z = if prob >= 1.0 { tau } else { tau + fit.quantile(prob) };
            if z.is_finite() {
                (tau, z.max(tau))
            } else {
                notes.push(alloc::format!("{side} tail: non-finite GPD quantile, using empirical quantile"));
                (tau, empirical())
            }
        }
        None => {
            notes.push(alloc::format!("{side} tail: degenerate GPD fit, using empirical quantile"));
            (tau, empirical())
        }
    }
}

pub fn detect_sparse(x: &TimeSeries, params: &SparseParams) -> Result<DetectionOutcome> {
    band(x.values(), params)?.outcome(x.values(), params.threshold)
}

pub(crate) fn band(x: &[f64], params: &SparseParams) -> Result<Band> {
    let n = x.len();
    if n < MIN_LEN {
        return Err(Error::TooShort { needed: MIN_LEN, found: n });
    }
    let mut notes = Vec::new();
    let (tau_u, z_u) = fit_tail(x, params.trunc_quantile, params.init_ratio, &mut notes, "upper");
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let (tau_l, z_l) = fit_tail(&neg, params.trunc_quantile, params.init_ratio, &mut notes, "lower");
    Ok(Band {
        forecast: None,
        upper_anchor: alloc::vec![tau_u; n],
        upper_unit: alloc::vec![z_u - tau_u; n],
        lower_anchor: alloc::vec![-tau_l; n],
        lower_unit: alloc::vec![z_l - tau_l; n],
        notes,
    })
}
