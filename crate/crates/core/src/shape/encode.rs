//! Piecewise aggregation and Gramian angular summation field encoding.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_WIDTH: usize = 32;

/// Resamples `x` to `width` equal-width segment means. Points straddling a
/// segment edge contribute in proportion to their overlap. Series shorter
/// than `width` are first linearly interpolated up to `width` points.
pub fn paa(x: &[f64], width: usize) -> Result<Vec<f64>> {
    if width < 2 {
        return Err(Error::BadWidth(width));
    }
    if x.is_empty() {
        return Err(Error::Empty);
    }
    if x.len() < width {
        return Ok(upsample(x, width));
    }
    let n = x.len();
    let seg = n as f64 / width as f64;
    let mut out = vec![0.0; width];
    for (k, o) in out.iter_mut().enumerate() {
        let start = k as f64 * seg;
        let end = start + seg;
        let mut acc = 0.0;
        let first = libm::floor(start) as usize;
        let last = (libm::ceil(end) as usize).min(n);
        for (i, v) in x.iter().enumerate().take(last).skip(first) {
            let overlap = f64::min(end, (i + 1) as f64) - f64::max(start, i as f64);
            if overlap > 0.0 {
                acc += v * overlap;
            }
        }
        *o = acc / seg;
    }
    Ok(out)
}

fn upsample(x: &[f64], width: usize) -> Vec<f64> {
    if x.len() == 1 {
        return vec![x[0]; width];
    }
    let scale = (x.len() - 1) as f64 / (width - 1) as f64;
    (0..width)
        .map(|j| {
            let pos = j as f64 * scale;
            let i = (libm::floor(pos) as usize).min(x.len() - 2);
            let frac = pos - i as f64;
            x[i] + frac * (x[i + 1] - x[i])
        })
        .collect()
}

/// Rescales into `[-1, 1]` against a shared range, clamping overshoot.
pub fn normalize(x: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    Ok(x.iter().map(|v| (2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)).collect())
}

/// Row-major `W x W` field `cos(phi_i + phi_j)` with `phi = arccos(x~)`.
pub fn gasf(x: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let xn = normalize(x, lo, hi)?;
    Ok(gasf_normalized(&xn))
}

pub fn gasf_normalized(xn: &[f64]) -> Vec<f64> {
    let w = xn.len();
    let sines: Vec<f64> = xn.iter().map(|v| libm::sqrt((1.0 - v * v).max(0.0))).collect();
    let mut g = vec![0.0; w * w];
    for i in 0..w {
        for j in 0..w {
            g[i * w + j] = xn[i] * xn[j] - sines[i] * sines[j];
        }
    }
    g
}

/// Three-channel image of `(x, u, l)`, channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasfImage {
    pub size: usize,
    pub data: Vec<f64>,
}

impl GasfImage {
    pub const CHANNELS: usize = 3;

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.size * self.size;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn at(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(c * self.size + i) * self.size + j]
    }
}

/// Encodes a detection result. The min-max range is shared across all three
/// inputs so the boundary's position relative to the data survives.
pub fn encode(x: &[f64], u: &[f64], l: &[f64], width: usize) -> Result<GasfImage> {
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, found: x.len() });
    }
    for s in [u, l] {
        if s.len() != x.len() {
            return Err(Error::LengthMismatch { expected: x.len(), found: s.len() });
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in [x, u, l] {
        let (a, b) = stats::min_max(s);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let mut data = Vec::with_capacity(3 * width * width);
    for s in [x, u, l] {
        data.extend(gasf(&paa(s, width)?, lo, hi)?);
    }
    Ok(GasfImage { size: width, data })
}
