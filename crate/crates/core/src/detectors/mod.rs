//! The three production detectors behind one contract.
//!
//! Every detector reduces to a [`Band`]: an anchor and a non-negative unit
//! width on each side. The boundary at threshold `t` is
//! `upper = anchor_u + t * unit_u`, `lower = anchor_l - t * unit_l`, so the
//! realized anomaly ratio can only fall as `t` grows, and a threshold sweep
//! needs one fit rather than one per grid point.

mod random;
mod seasonal;
mod space;
mod sparse;

use alloc::string::String;
use alloc::vec::Vec;

pub use random::detect_random;
pub use seasonal::detect_seasonal;
pub use space::{
    param_space, Average, DetectorParams, ParamEntry, ParamKind, ParamSpace, RandomParams, SeasonalParams,
    SparseParams, TuneTarget, THRESHOLD, THRESHOLD_MAX, THRESHOLD_MIN,
};
pub use sparse::{detect_sparse, fit_gpd, GpdFit};

use crate::error::Result;
use crate::series::{Boundary, DetectionOutcome, ParamSet, TimeSeries};
use crate::stats;

/// Threshold-independent part of a detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub forecast: Option<Vec<f64>>,
    pub upper_anchor: Vec<f64>,
    pub upper_unit: Vec<f64>,
    pub lower_anchor: Vec<f64>,
    pub lower_unit: Vec<f64>,
    pub notes: Vec<String>,
}

impl Band {
    /// Symmetric band `center ± t * scale`.
    pub fn symmetric(forecast: Vec<f64>, scale: Vec<f64>) -> Band {
        Band {
            upper_anchor: forecast.clone(),
            lower_anchor: forecast.clone(),
            upper_unit: scale.clone(),
            lower_unit: scale,
            forecast: Some(forecast),
            notes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.upper_anchor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper_anchor.is_empty()
    }

    pub fn boundary(&self, threshold: f64) -> Boundary {
        Boundary {
            upper: self.upper_anchor.iter().zip(&self.upper_unit).map(|(a, u)| a + threshold * u).collect(),
            lower: self.lower_anchor.iter().zip(&self.lower_unit).map(|(a, u)| a - threshold * u).collect(),
        }
    }

    pub fn outcome(&self, values: &[f64], threshold: f64) -> Result<DetectionOutcome> {
        let mut out = DetectionOutcome::from_boundary(values, self.forecast.clone(), self.boundary(threshold))?;
        out.notes = self.notes.clone();
        Ok(out)
    }

    /// False when every unit width is zero, so the threshold cannot move
    /// the boundary.
    pub fn responds_to_threshold(&self) -> bool {
        self.upper_unit.iter().chain(&self.lower_unit).any(|u| *u > 0.0)
    }

    /// Realized ratio at `threshold` without materialising the boundary.
    pub fn ratio(&self, values: &[f64], threshold: f64) -> f64 {
        let flagged = (0..values.len())
            .filter(|&i| {
                let x = values[i];
                x > self.upper_anchor[i] + threshold * self.upper_unit[i]
                    || x < self.lower_anchor[i] - threshold * self.lower_unit[i]
            })
            .count();
        flagged as f64 / values.len() as f64
    }
}

/// Fits the threshold-independent band for any detector.
pub fn fit_band(x: &TimeSeries, params: &DetectorParams) -> Result<Band> {
    match params {
        DetectorParams::Random(p) => random::band(x.values(), p),
        DetectorParams::Sparse(p) => sparse::band(x.values(), p),
        DetectorParams::Seasonal(p) => seasonal::band(x.values(), p),
    }
}

pub fn detect(x: &TimeSeries, params: &DetectorParams) -> Result<DetectionOutcome> {
    fit_band(x, params)?.outcome(x.values(), params.threshold())
}

pub fn detect_params(x: &TimeSeries, params: &ParamSet) -> Result<DetectionOutcome> {
    detect(x, &DetectorParams::try_from(params)?)
}

/// Causal residual scale: robust spread of the residuals strictly before
/// each point, over at most `window` of them. The first two points borrow
/// the scale of the third, and every scale respects the series floor.
pub(crate) fn trailing_scale(values: &[f64], residuals: &[f64], window: usize) -> Vec<f64> {
    let n = residuals.len();
    let floor = stats::sigma_floor(values);
    let mut scratch = Vec::with_capacity(window);
    let mut scale: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window);
            stats::residual_scale(&residuals[lo..i], &mut scratch)
        })
        .collect();
    let warm = 2.min(n.saturating_sub(1));
    for i in 0..warm {
        scale[i] = scale[warm];
    }
    for s in &mut scale {
        if !(*s >= floor) {
            *s = floor;
        }
    }
    scale
}
