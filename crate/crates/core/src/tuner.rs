//! Sequential parameter tuning: shape, then prediction, then sensitivity.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{extract_features, PatternClassifier, RuleClassifier};
use crate::detectors::{fit_band, Band, DetectorParams, ParamSpace, TuneTarget, THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::{prediction_error, MetricKind};
use crate::sensitivity::{candidates, curve_from_band, select_among, CandidateSet, SensitivityConfig, ThresholdCurve};
use crate::series::{DetectionOutcome, Method, ParamSet, ParamValue, PatternLabel, SensitivityTarget, TimeSeries};
use crate::shape::ShapeScorer;
use crate::smoothing::{smooth_values, SmoothConfig};

const RUNNER_UPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    /// Weight of the squashed MAPE term in [`combined_score`].
    pub lambda: f64,
    pub smooth: SmoothConfig,
    pub sensitivity: SensitivityConfig,
    pub classifier: RuleClassifier,
    /// Cap on candidates evaluated in each grid stage.
    pub max_evals: Option<usize>,
    /// Replacement grids, keyed by method then parameter name.
    pub grids: BTreeMap<Method, BTreeMap<String, Vec<ParamValue>>>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            lambda: 0.5,
            smooth: SmoothConfig::default(),
            sensitivity: SensitivityConfig::default(),
            classifier: RuleClassifier::default(),
            max_evals: None,
            grids: BTreeMap::new(),
        }
    }
}

impl TuneConfig {
    /// Parameter space for `method` with configured grid overrides applied
    /// and checked against the declared bounds.
    pub fn space(&self, method: Method) -> Result<ParamSpace> {
        let mut space = ParamSpace::for_method(method);
        if let Some(overrides) = self.grids.get(&method) {
            for (name, grid) in overrides {
                let entry = space.entry_mut(name).ok_or_else(|| Error::InvalidParam {
                    name: name.clone(),
                    reason: alloc::format!("not a {method} parameter"),
                })?;
                if grid.is_empty() {
                    return Err(Error::InvalidParam { name: name.clone(), reason: "empty grid".into() });
                }
                for v in grid {
                    entry.check(v)?;
                }
                entry.grid = grid.clone();
            }
        }
        Ok(space)
    }
}

/// Shape score penalised by a squashed MAPE; higher is better.
pub fn combined_score(shape: f64, mape: f64, lambda: f64) -> f64 {
    shape - lambda * (mape / (mape + 100.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: BTreeMap<String, ParamValue>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub target: TuneTarget,
    pub skipped: bool,
    pub evaluated: usize,
    /// Candidates the detector rejected, e.g. a window longer than the series.
    #[serde(skip_serializing_if = "is_zero", default)]
    pub failed: usize,
    pub truncated: bool,
    pub best_value: Option<f64>,
    pub runner_ups: Vec<Candidate>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl StageReport {
    fn skipped(target: TuneTarget) -> Self {
        StageReport {
            target,
            skipped: true,
            evaluated: 0,
            failed: 0,
            truncated: false,
            best_value: None,
            runner_ups: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub method: Method,
    pub best: ParamSet,
    pub stages: Vec<StageReport>,
    pub budget_exhausted: bool,
    pub curve: ThresholdCurve,
    pub candidates: CandidateSet,
}

/// Radical inverse of `k` in base 2.
fn van_der_corput(mut k: usize) -> f64 {
    let (mut v, mut denom) = (0.0, 1.0);
    while k > 0 {
        denom *= 2.0;
        v += (k & 1) as f64 / denom;
        k >>= 1;
    }
    v
}

/// Evaluation order for a grid of `n` candidates where `first` leads and
/// the rest are spread by a low-discrepancy sequence. Every prefix of the
/// order is a subset of every longer prefix, so a larger budget never sees
/// fewer candidates.
fn spread_order(n: usize, first: usize) -> Vec<usize> {
    let mut taken = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    taken[first] = true;
    order.push(first);
    let mut k = 0;
    while order.len() < n && k < 64 * n {
        let i = ((van_der_corput(k) * n as f64) as usize).min(n - 1);
        if !taken[i] {
            taken[i] = true;
            order.push(i);
        }
        k += 1;
    }
    order.extend((0..n).filter(|&i| !taken[i]));
    order
}

/// Cartesian product of the entries' grids, first entry varying slowest,
/// and the index of the all-defaults combination when it is on the grid.
fn grid_product(entries: &[&crate::detectors::ParamEntry]) -> (Vec<Vec<ParamValue>>, usize) {
    let mut combos: Vec<Vec<ParamValue>> = alloc::vec![Vec::new()];
    for e in entries {
        let grid = if e.grid.is_empty() { alloc::vec![e.default.clone()] } else { e.grid.clone() };
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                grid.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    let default = combos
        .iter()
        .position(|c| c.iter().zip(entries).all(|(v, e)| *v == e.default))
        .unwrap_or(0);
    (combos, default)
}

struct Scored {
    value: f64,
    params: ParamSet,
}

/// Runs one grid stage. `score` returns a value where larger is better.
fn run_stage(
    target: TuneTarget,
    entries: &[&crate::detectors::ParamEntry],
    base: &ParamSet,
    max_evals: Option<usize>,
    mut score: impl FnMut(&ParamSet) -> Result<f64>,
    report_sign: f64,
) -> Result<(StageReport, ParamSet)> {
    let (combos, default) = grid_product(entries);
    let order = spread_order(combos.len(), default);
    let budget = max_evals.unwrap_or(usize::MAX).max(1);
    let truncated = order.len() > budget;
    let mut scored: Vec<Scored> = Vec::new();
    let mut failed = 0;
    let mut last_err = None;
    for &i in order.iter().take(budget) {
        let mut ps = base.clone();
        for (e, v) in entries.iter().zip(&combos[i]) {
            ps.set(&e.name, v.clone());
        }
        match score(&ps) {
            Ok(v) if v.is_finite() => scored.push(Scored { value: v, params: ps }),
            Ok(_) => failed += 1,
            Err(e) => {
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    if scored.is_empty() {
        return Err(last_err.unwrap_or(Error::AllSkipped));
    }
    // Stable sort keeps evaluation order (defaults first) among ties.
    let mut ranked: Vec<usize> = (0..scored.len()).collect();
    ranked.sort_by(|&a, &b| scored[b].value.total_cmp(&scored[a].value));
    let best = scored[ranked[0]].params.clone();
    let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
    let runner_ups = ranked
        .iter()
        .take(RUNNER_UPS)
        .map(|&i| Candidate {
            params: names.iter().filter_map(|n| scored[i].params.get(n).map(|v| ((*n).into(), v.clone()))).collect(),
            value: report_sign * scored[i].value,
        })
        .collect();
    let report = StageReport {
        target,
        skipped: false,
        evaluated: scored.len() + failed,
        failed,
        truncated,
        best_value: Some(report_sign * scored[ranked[0]].value),
        runner_ups,
    };
    Ok((report, best))
}

fn shape_of<S: ShapeScorer + ?Sized>(scorer: &S, x: &[f64], band: &Band, threshold: f64) -> Result<f64> {
    let b = band.boundary(threshold);
    scorer.score(x, &b.upper, &b.lower)
}

fn mape_of(target: &[f64], band: &Band) -> Result<f64> {
    let forecast = band.forecast.as_ref().ok_or(Error::Undefined)?;
    prediction_error(MetricKind::MAPE, target, forecast)
}

/// Tunes the detector for `label` on `x` toward the anomaly ratio `target`.
pub fn tune<S: ShapeScorer + ?Sized>(
    x: &TimeSeries,
    label: &PatternLabel,
    target: SensitivityTarget,
    scorer: &S,
    cfg: &TuneConfig,
) -> Result<TuneReport> {
    let method = label.method();
    let space = cfg.space(method)?;
    let mut params = space.defaults(label.period());
    let default_threshold = space.sensitivity_param().default.as_f64().unwrap_or(1.0);
    let values = x.values();
    let smoothed = smooth_values(values, &cfg.smooth)?;
    let mut stages = Vec::with_capacity(3);
    let mut budget_exhausted = false;

    let fit = |ps: &ParamSet| -> Result<Band> { fit_band(x, &DetectorParams::try_from(ps)?) };

    let shape_entries: Vec<_> = space
        .entries
        .iter()
        .filter(|e| matches!(e.tuned_by, TuneTarget::Shape | TuneTarget::ShapePlusPrediction))
        .collect();
    if shape_entries.is_empty() {
        stages.push(StageReport::skipped(TuneTarget::Shape));
    } else {
        let combined = shape_entries.iter().any(|e| e.tuned_by == TuneTarget::ShapePlusPrediction);
        let (report, best) = run_stage(
            TuneTarget::Shape,
            &shape_entries,
            &params,
            cfg.max_evals,
            |ps| {
                let band = fit(ps)?;
                if !band.responds_to_threshold() {
                    return Err(Error::InvalidParam { name: THRESHOLD.into(), reason: "boundary ignores the threshold".into() });
                }
                let shape = shape_of(scorer, values, &band, default_threshold)?;
                if combined {
                    Ok(combined_score(shape, mape_of(&smoothed, &band)?, cfg.lambda))
                } else {
                    Ok(shape)
                }
            },
            1.0,
        )?;
        budget_exhausted |= report.truncated;
        stages.push(report);
        params = best;
    }

    let pred_entries: Vec<_> = space.tuned_by(TuneTarget::Prediction).collect();
    if pred_entries.is_empty() {
        stages.push(StageReport::skipped(TuneTarget::Prediction));
    } else {
        let (report, best) = run_stage(
            TuneTarget::Prediction,
            &pred_entries,
            &params,
            cfg.max_evals,
            |ps| Ok(-mape_of(&smoothed, &fit(ps)?)?),
            -1.0,
        )?;
        budget_exhausted |= report.truncated;
        stages.push(report);
        params = best;
    }

    let band = fit(&params)?;
    let grid = cfg.sensitivity.grid()?;
    let curve = curve_from_band(&band, values, &grid)?;
    let set = candidates(&curve, &cfg.sensitivity)?;
    let chosen = select_among(&curve, &set.merged, target);
    let p = target.get();
    let mut ranked: Vec<(f64, f64)> =
        set.merged.iter().filter_map(|&t| curve.ratio_at(t).map(|pt| (libm::fabs(p - pt), t))).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    params.set(THRESHOLD, ParamValue::Float(chosen));
    stages.push(StageReport {
        target: TuneTarget::Sensitivity,
        skipped: false,
        evaluated: set.merged.len(),
        failed: 0,
        truncated: false,
        best_value: Some(libm::fabs(p - curve.ratio_at(chosen).unwrap_or(0.0))),
        runner_ups: ranked
            .iter()
            .take(RUNNER_UPS)
            .map(|&(gap, t)| Candidate {
                params: BTreeMap::from([(THRESHOLD.into(), ParamValue::Float(t))]),
                value: gap,
            })
            .collect(),
    });
    space.validate(&params)?;
    Ok(TuneReport { method, best: params, stages, budget_exhausted, curve, candidates: set })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoResult {
    pub label: PatternLabel,
    pub report: TuneReport,
    pub outcome: DetectionOutcome,
}

/// Classifies, tunes and detects. The target ratio is the only input.
pub fn auto<S: ShapeScorer + ?Sized>(
    x: &TimeSeries,
    target: SensitivityTarget,
    scorer: &S,
    cfg: &TuneConfig,
) -> Result<AutoResult> {
    let label = cfg.classifier.classify(&extract_features(x)?);
    let report = tune(x, &label, target, scorer, cfg)?;
    let outcome = fit_band(x, &DetectorParams::try_from(&report.best)?)?
        .outcome(x.values(), report.best.float(THRESHOLD)?)?;
    Ok(AutoResult { label, report, outcome })
}
