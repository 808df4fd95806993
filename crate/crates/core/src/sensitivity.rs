//! Threshold selection against a target anomaly ratio.
//!
//! Sweeping the threshold gives a non-increasing ratio curve. Candidate
//! thresholds are its knees (where the curve flattens) and its active points
//! (the largest single-step drops); the chosen threshold is the candidate
//! whose ratio is closest to the target.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::detectors::{fit_band, Band, DetectorParams, THRESHOLD_MAX, THRESHOLD_MIN};
use crate::error::{Error, Result};
use crate::series::{SensitivityTarget, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    pub grid_size: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    /// Kneedle sensitivity `S`.
    pub knee_s: f64,
    /// Number of active points.
    pub active_k: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig { grid_size: 64, grid_min: THRESHOLD_MIN, grid_max: THRESHOLD_MAX, knee_s: 1.0, active_k: 5 }
    }
}

impl SensitivityConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        log_grid(self.grid_min, self.grid_max, self.grid_size)
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParam { name: "grid".into(), reason: "need n >= 2 and 0 < lo < hi".into() });
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let mut g: Vec<f64> = (0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub p: f64,
}

/// Realized anomaly ratio per threshold, thresholds ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurvePoint>", into = "Vec<CurvePoint>")]
pub struct ThresholdCurve {
    points: Vec<CurvePoint>,
}

impl TryFrom<Vec<CurvePoint>> for ThresholdCurve {
    type Error = Error;

    fn try_from(points: Vec<CurvePoint>) -> Result<Self> {
        ThresholdCurve::new(points)
    }
}

impl From<ThresholdCurve> for Vec<CurvePoint> {
    fn from(c: ThresholdCurve) -> Self {
        c.points
    }
}

impl ThresholdCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, found: points.len() });
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].t > w[0].t) || w[1].p > w[0].p {
                return Err(Error::NonMonotoneCurve { index: i + 1 });
            }
        }
        if points.iter().any(|c| !(0.0..=1.0).contains(&c.p) || !c.t.is_finite()) {
            return Err(Error::InvalidParam { name: "curve".into(), reason: "ratios must lie in [0, 1]".into() });
        }
        Ok(ThresholdCurve { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|c| c.t)
    }

    /// Ratio at a threshold on the curve's grid.
    pub fn ratio_at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|c| c.t == t).map(|c| c.p)
    }
}

/// Sweeps `grid` over one fitted band.
pub fn curve_from_band(band: &Band, values: &[f64], grid: &[f64]) -> Result<ThresholdCurve> {
    let points = grid.iter().map(|&t| CurvePoint { t, p: band.ratio(values, t) }).collect();
    ThresholdCurve::new(points)
}

/// Ratio curve for a detector whose parameters are fixed except the
/// threshold.
pub fn threshold_curve(x: &TimeSeries, params: &DetectorParams, grid: &[f64]) -> Result<ThresholdCurve> {
    if grid.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: grid.len() });
    }
    if let Some(t) = grid.iter().find(|t| !(THRESHOLD_MIN..=THRESHOLD_MAX).contains(*t)) {
        return Err(Error::InvalidParam {
            name: "threshold".into(),
            reason: alloc::format!("grid value {t} outside [{THRESHOLD_MIN}, {THRESHOLD_MAX}]"),
        });
    }
    curve_from_band(&fit_band(x, params)?, x.values(), grid)
}

/// Kneedle difference curve: signed distance from the chord joining the
/// normalised end points, positive on the side the curve bulges toward.
/// `None` when the curve is flat.
pub fn difference_curve(curve: &ThresholdCurve) -> Option<Vec<f64>> {
    let pts = curve.points();
    let n = pts.len();
    let (t0, t1) = (pts[0].t, pts[n - 1].t);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in pts {
        lo = lo.min(c.p);
        hi = hi.max(c.p);
    }
    if !(hi > lo) {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|c| (c.t - t0) / (t1 - t0)).collect();
    let ys: Vec<f64> = pts.iter().map(|c| (c.p - lo) / (hi - lo)).collect();
    let decreasing = ys[n - 1] < ys[0];
    // Curvature sign from the mean change in slope.
    let slopes: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
    let bend = slopes.windows(2).map(|w| w[1] - w[0]).sum::<f64>();
    let sign = if bend > 0.0 { -1.0 } else { 1.0 };
    Some(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let chord = if decreasing { 1.0 - x } else { *x };
                sign * (y - chord)
            })
            .collect(),
    )
}

/// Knee thresholds, ascending.
pub fn knee_points(curve: &ThresholdCurve, sensitivity: f64) -> Result<Vec<f64>> {
    let pts = curve.points();
    let n = pts.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: n });
    }
    let Some(d) = difference_curve(curve) else {
        return Ok(Vec::new());
    };
    let span = pts[n - 1].t - pts[0].t;
    let mean_step = pts.windows(2).map(|w| (w[1].t - w[0].t) / span).sum::<f64>() / (n - 1) as f64;
    let maxima: Vec<usize> = (1..n - 1).filter(|&i| d[i] >= d[i - 1] && d[i] > d[i + 1] && d[i] > 1e-12).collect();
    let mut knees = Vec::new();
    for (m, &j) in maxima.iter().enumerate() {
        let threshold = d[j] - sensitivity * mean_step;
        let stop = maxima.get(m + 1).copied().unwrap_or(n);
        if (j + 1..stop).any(|i| d[i] < threshold) {
            knees.push(pts[j].t);
        }
    }
    Ok(knees)
}

/// Upper thresholds of the `k` largest ratio drops, ascending. Ties go to the
/// smaller threshold; steps with no drop are never returned.
pub fn active_points(curve: &ThresholdCurve, k: usize) -> Result<Vec<f64>> {
    let pts = curve.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: pts.len() });
    }
    let mut drops: Vec<(f64, usize)> =
        (0..pts.len() - 1).map(|i| (pts[i].p - pts[i + 1].p, i + 1)).filter(|(d, _)| *d > 0.0).collect();
    drops.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = drops.iter().take(k).map(|d| d.1).collect();
    out.sort_unstable();
    Ok(out.into_iter().map(|i| pts[i].t).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub knees: Vec<f64>,
    pub actives: Vec<f64>,
    /// Deduplicated union, ascending; all curve thresholds when both sets
    /// are empty.
    pub merged: Vec<f64>,
}

pub fn candidates(curve: &ThresholdCurve, cfg: &SensitivityConfig) -> Result<CandidateSet> {
    let knees = if curve.len() >= 3 { knee_points(curve, cfg.knee_s)? } else { Vec::new() };
    let actives = active_points(curve, cfg.active_k)?;
    let mut merged: Vec<f64> = knees.iter().chain(&actives).copied().collect();
    merged.sort_by(f64::total_cmp);
    merged.dedup();
    if merged.is_empty() {
        merged = curve.thresholds().collect();
    }
    Ok(CandidateSet { knees, actives, merged })
}

/// Candidate whose ratio is closest to the target; ties go to the larger
/// threshold. Candidates not on the curve are ignored, and if none remain
/// every curve threshold is considered.
pub fn select_among(curve: &ThresholdCurve, candidates: &[f64], target: SensitivityTarget) -> f64 {
    let p = target.get();
    let consider = |best: &mut Option<(f64, f64)>, t: f64, pt: f64| {
        let gap = libm::fabs(p - pt);
        match *best {
            Some((bg, bt)) if gap > bg || (gap == bg && t <= bt) => {}
            _ => *best = Some((gap, t)),
        }
    };
    let mut best = None;
    for &t in candidates {
        if let Some(pt) = curve.ratio_at(t) {
            consider(&mut best, t, pt);
        }
    }
    if best.is_none() {
        for c in curve.points() {
            consider(&mut best, c.t, c.p);
        }
    }
    best.expect("curve has at least two points").1
}

pub fn select_threshold(curve: &ThresholdCurve, target: SensitivityTarget, cfg: &SensitivityConfig) -> Result<f64> {
    let set = candidates(curve, cfg)?;
    Ok(select_among(curve, &set.merged, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::RandomParams;
    use crate::detectors::Average;
    use alloc::vec;
    use proptest::prelude::*;

    fn curve(ts: &[f64], ps: &[f64]) -> ThresholdCurve {
        ThresholdCurve::new(ts.iter().zip(ps).map(|(&t, &p)| CurvePoint { t, p }).collect()).unwrap()
    }

    fn target(p: f64) -> SensitivityTarget {
        SensitivityTarget::new(p).unwrap()
    }

    /// Index of the largest distance to the end-point chord, by brute force.
    fn chord_oracle(c: &ThresholdCurve) -> usize {
        let pts = c.points();
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c.p), h.max(c.p)));
        let nx = |t: f64| (t - a.t) / (b.t - a.t);
        let ny = |p: f64| (p - lo) / (hi - lo);
        let (x0, y0, x1, y1) = (nx(a.t), ny(a.p), nx(b.t), ny(b.p));
        let len = libm::sqrt((x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0));
        (0..pts.len())
            .max_by(|&i, &j| {
                let dist = |k: usize| {
                    let (x, y) = (nx(pts[k].t), ny(pts[k].p));
                    libm::fabs((y1 - y0) * x - (x1 - x0) * y + x1 * y0 - y1 * x0) / len
                };
                dist(i).total_cmp(&dist(j)).then(j.cmp(&i))
            })
            .unwrap()
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.5, 10.0, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!((g[0], g[63]), (0.5, 10.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(log_grid(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn hand_counted_curve() {
        // forecast 0 and scale 1 everywhere, deviations 5, 3, 1
        let band = Band::symmetric(vec![0.0; 3], vec![1.0; 3]);
        let c = curve_from_band(&band, &[5.0, 3.0, 1.0], &[0.5, 2.0, 4.0, 6.0]).unwrap();
        let ps: Vec<f64> = c.points().iter().map(|c| c.p).collect();
        assert_eq!(ps, vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
    }

    #[test]
    fn constant_series_curve_is_zero() {
        let x = TimeSeries::from_values("c", vec![4.0; 80]).unwrap();
        let p = DetectorParams::Random(RandomParams { average: Average::Mean, window_size: 10, threshold: 3.0 });
        let c = threshold_curve(&x, &p, &SensitivityConfig::default().grid().unwrap()).unwrap();
        assert!(c.points().iter().all(|c| c.p == 0.0));
        assert!(threshold_curve(&x, &p, &[0.1, 1.0]).is_err());
    }

    #[test]
    fn curve_rejects_increase() {
        let pts = vec![CurvePoint { t: 1.0, p: 0.1 }, CurvePoint { t: 2.0, p: 0.2 }];
        assert_eq!(ThresholdCurve::new(pts), Err(Error::NonMonotoneCurve { index: 1 }));
    }

    #[test]
    fn piecewise_knee() {
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        // steep linear fall to (2, 0.1), then slowly to 0.0 at t = 5
        let ps: Vec<f64> = ts.iter().map(|&t| if t <= 2.0 { 1.0 - 0.45 * t } else { 0.1 - (t - 2.0) / 30.0 }).collect();
        let c = curve(&ts, &ps);
        let knees = knee_points(&c, 1.0).unwrap();
        assert_eq!(knees, vec![2.0]);
        assert_eq!(ts[chord_oracle(&c)], 2.0);
    }

    #[test]
    fn linear_curve_has_no_knee() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ps: Vec<f64> = ts.iter().map(|t| 1.0 - t / 19.0).collect();
        assert!(knee_points(&curve(&ts, &ps), 1.0).unwrap().is_empty());
        assert!(matches!(knee_points(&curve(&ts[..2], &ps[..2]), 1.0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn hyperbola_knee_matches_chord_oracle() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let ps: Vec<f64> = ts.iter().map(|t| 1.0 / (1.0 + t)).collect();
        let c = curve(&ts, &ps);
        let knees = knee_points(&c, 1.0).unwrap();
        let oracle = ts[chord_oracle(&c)];
        assert!(knees.iter().any(|k| (k - oracle).abs() <= 0.2 + 1e-12), "{knees:?} vs {oracle}");
    }

    #[test]
    fn active_point_examples() {
        let c = curve(&[1.0, 2.0, 3.0, 4.0], &[0.5, 0.5, 0.1, 0.09]);
        assert_eq!(active_points(&c, 1).unwrap(), vec![3.0]);
        let even = curve(&[1.0, 2.0, 3.0, 4.0], &[0.75, 0.5, 0.25, 0.0]);
        assert_eq!(active_points(&even, 2).unwrap(), vec![2.0, 3.0]);
        assert_eq!(active_points(&even, 9).unwrap(), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn selection_examples() {
        let c = curve(&[1.0, 2.0, 3.0, 4.0], &[0.2, 0.1, 0.04, 0.01]);
        assert_eq!(select_among(&c, &[2.0, 3.0, 4.0], target(0.05)), 3.0);
        assert_eq!(select_among(&c, &[2.0, 3.0, 4.0], target(0.01)), 4.0);
        // equal gaps: the larger threshold wins
        let tie = curve(&[1.0, 2.0], &[0.75, 0.25]);
        assert_eq!(select_among(&tie, &[1.0, 2.0], target(0.5)), 2.0);
        // off-curve candidates fall back to the full grid
        assert_eq!(select_among(&c, &[7.0], target(0.1)), 2.0);
    }

    #[test]
    fn candidates_merge_and_fallback() {
        let flat = curve(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        let set = candidates(&flat, &SensitivityConfig::default()).unwrap();
        assert!(set.knees.is_empty() && set.actives.is_empty());
        assert_eq!(set.merged, vec![1.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn candidates_on_grid_and_sorted(raw in proptest::collection::vec(0.0f64..0.2, 3..40)) {
            let mut ps = raw.clone();
            ps.sort_by(|a, b| b.total_cmp(a));
            let ts: Vec<f64> = (0..ps.len()).map(|i| 0.5 + i as f64 * 0.25).collect();
            let c = curve(&ts, &ps);
            let set = candidates(&c, &SensitivityConfig::default()).unwrap();
            prop_assert!(set.merged.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(set.merged.iter().all(|t| ts.contains(t)));
            let chosen = select_threshold(&c, target(0.05), &SensitivityConfig::default()).unwrap();
            prop_assert!(ts.contains(&chosen));
        }

        #[test]
        fn knees_invariant_under_axis_rescale(
            raw in proptest::collection::vec(0.0f64..1.0, 4..30),
            a in 0.1f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let mut ps = raw.clone();
            ps.sort_by(|x, y| y.total_cmp(x));
            let ts: Vec<f64> = (0..ps.len()).map(|i| 1.0 + i as f64).collect();
            let scaled: Vec<f64> = ts.iter().map(|t| a * t + b).collect();
            let k1 = knee_points(&curve(&ts, &ps), 1.0).unwrap();
            let k2 = knee_points(&curve(&scaled, &ps), 1.0).unwrap();
            let mapped: Vec<f64> = k1.iter().map(|t| a * t + b).collect();
            prop_assert_eq!(k2.len(), mapped.len());
            for (x, y) in k2.iter().zip(&mapped) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
