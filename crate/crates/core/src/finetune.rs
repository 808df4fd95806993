//! User fine-tuning of a cached detection outcome.
//!
//! Nothing here re-runs a detector. The boundary width is rescaled about the
//! forecast (or the boundary midline when there is none) and the mask is
//! then filtered by direction and baselines.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AnomalyMask, Boundary, DetectionOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineTune {
    pub threshold_mult: f64,
    /// Values below this line never count as upper anomalies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_baseline: Option<f64>,
    /// Values above this line never count as lower anomalies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_baseline: Option<f64>,
    pub direction: Direction,
}

impl Default for FineTune {
    fn default() -> Self {
        FineTune { threshold_mult: 1.0, upper_baseline: None, lower_baseline: None, direction: Direction::Both }
    }
}

impl FineTune {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_mult > 0.0 && self.threshold_mult.is_finite()) {
            return Err(Error::InvalidParam { name: "threshold_mult".into(), reason: "must be positive and finite".into() });
        }
        for (name, b) in [("upper_baseline", self.upper_baseline), ("lower_baseline", self.lower_baseline)] {
            if b.is_some_and(|v| !v.is_finite()) {
                return Err(Error::InvalidParam { name: name.into(), reason: "must be finite".into() });
            }
        }
        if let (Some(upper), Some(lower)) = (self.upper_baseline, self.lower_baseline) {
            if upper < lower {
                return Err(Error::InvalidBaselines { upper, lower });
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == FineTune::default()
    }
}

/// Widths scaled by `mult` about the forecast, or about the midline.
pub fn scale_boundary(boundary: &Boundary, forecast: Option<&[f64]>, mult: f64) -> Boundary {
    let n = boundary.len();
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let (u, l) = (boundary.upper[i], boundary.lower[i]);
        let c = forecast.map_or(0.5 * (u + l), |f| f[i]);
        upper.push(c + mult * (u - c));
        lower.push(c - mult * (c - l));
    }
    Boundary { upper, lower }
}

/// Applies `ft` to `cached`, the outcome of detection on `values`.
pub fn apply(values: &[f64], cached: &DetectionOutcome, ft: &FineTune) -> Result<DetectionOutcome> {
    ft.validate()?;
    if values.len() != cached.boundary.len() {
        return Err(Error::LengthMismatch { expected: cached.boundary.len(), found: values.len() });
    }
    if ft.is_identity() {
        return Ok(cached.clone());
    }
    let boundary = if ft.threshold_mult == 1.0 {
        cached.boundary.clone()
    } else {
        scale_boundary(&cached.boundary, cached.forecast.as_deref(), ft.threshold_mult)
    };
    let flags = values.iter().enumerate().map(|(i, &x)| {
        let up = x > boundary.upper[i]
            && ft.direction != Direction::Down
            && ft.upper_baseline.is_none_or(|b| x >= b);
        let down = x < boundary.lower[i]
            && ft.direction != Direction::Up
            && ft.lower_baseline.is_none_or(|b| x <= b);
        up || down
    });
    let anomalies = AnomalyMask::from_bools(flags);
    Ok(DetectionOutcome {
        forecast: cached.forecast.clone(),
        realized_ratio: anomalies.ratio(),
        anomalies,
        boundary,
        notes: cached.notes.clone(),
    })
}
