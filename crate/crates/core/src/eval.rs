//! Before/after evaluation of tuning on labelled series.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{extract_features, PatternClassifier};
use crate::detectors::{detect, DetectorParams, ParamSpace};
use crate::error::{Error, Result};
use crate::metrics::{auc, pointwise_f1};
use crate::series::{Method, ParamSet, PatternLabel, SensitivityTarget, TimeSeries};
use crate::shape::ShapeScorer;
use crate::tuner::{tune, TuneConfig};

pub const MIN_SPLIT: usize = 32;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.3;

/// Contiguous prefix/suffix split; both parts need at least 32 points.
pub fn split(x: &TimeSeries, train_fraction: f64) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParam { name: "train_fraction".into(), reason: "must lie in (0, 1)".into() });
    }
    let n = x.len();
    let cut = libm::round(n as f64 * train_fraction) as usize;
    let short = cut.min(n - cut);
    if short < MIN_SPLIT {
        return Err(Error::TooShort { needed: MIN_SPLIT, found: short });
    }
    let train = x.slice(0, cut, alloc::format!("{}/train", x.id()))?;
    let test = x.slice(cut, n, alloc::format!("{}/test", x.id()))?;
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<PatternLabel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub before: Option<ParamSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub after: Option<ParamSet>,
    pub f1_before: Option<f64>,
    pub f1_after: Option<f64>,
    pub auc_before: Option<f64>,
    pub auc_after: Option<f64>,
    /// Why the row has no scores.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
}

impl EvalRow {
    fn skipped(id: &str, reason: String) -> Self {
        EvalRow {
            id: id.to_string(),
            method: None,
            label: None,
            target: None,
            before: None,
            after: None,
            f1_before: None,
            f1_after: None,
            auc_before: None,
            auc_after: None,
            skipped: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: usize,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Rows where after >= before.
    pub not_worse: usize,
    /// Rows where after > before.
    pub improved: usize,
}

impl Aggregate {
    fn over(pairs: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut a = Aggregate::default();
        for (b, t) in pairs {
            a.rows += 1;
            a.mean_before += b;
            a.mean_after += t;
            a.not_worse += (t >= b) as usize;
            a.improved += (t > b) as usize;
        }
        if a.rows > 0 {
            a.mean_before /= a.rows as f64;
            a.mean_after /= a.rows as f64;
        }
        a
    }

    pub fn not_worse_fraction(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.not_worse as f64 / self.rows as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub f1: Aggregate,
    pub auc: Aggregate,
    pub skipped: usize,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let f1 = Aggregate::over(rows.iter().filter_map(|r| Some((r.f1_before?, r.f1_after?))));
        let auc = Aggregate::over(rows.iter().filter_map(|r| Some((r.auc_before?, r.auc_after?))));
        let skipped = rows.iter().filter(|r| r.skipped.is_some()).count();
        EvalReport { rows, f1, auc, skipped }
    }
}

/// Target ratio from training labels, 1% when the training part is clean.
pub fn target_from_labels(labels: &[u8]) -> SensitivityTarget {
    let k = labels.iter().filter(|&&y| y == 1).count();
    if k == 0 || k == labels.len() {
        SensitivityTarget::DEFAULT
    } else {
        SensitivityTarget::new(k as f64 / labels.len() as f64).unwrap_or(SensitivityTarget::DEFAULT)
    }
}

fn score_on(test: &TimeSeries, params: &ParamSet) -> Result<(Result<f64>, Result<f64>)> {
    let labels = test.labels().ok_or_else(|| Error::Unlabeled(test.id().to_string()))?;
    let out = detect(test, &DetectorParams::try_from(params)?)?;
    let f1 = pointwise_f1(&out.anomalies, labels);
    let area = auc(&out.exceedance(test.values()), labels);
    Ok((f1, area))
}

/// Tunes on the training prefix and scores defaults against tuned
/// parameters on the test suffix. Failures become skipped rows.
pub fn evaluate_series<S: ShapeScorer + ?Sized>(
    x: &TimeSeries,
    scorer: &S,
    cfg: &TuneConfig,
    train_fraction: f64,
) -> Result<EvalRow> {
    x.labels().ok_or_else(|| Error::Unlabeled(x.id().to_string()))?;
    let run = || -> Result<EvalRow> {
        let (train, test) = split(x, train_fraction)?;
        let target = target_from_labels(train.labels().unwrap_or(&[]));
        let label = cfg.classifier.classify(&extract_features(&train)?);
        let before = ParamSpace::for_method(label.method()).defaults(label.period());
        let report = tune(&train, &label, target, scorer, cfg)?;
        let (f1_before, auc_before) = score_on(&test, &before)?;
        let (f1_after, auc_after) = score_on(&test, &report.best)?;
        let reason = match (&f1_before, &auc_before) {
            (Err(e), _) | (_, Err(e)) => Some(alloc::format!("{e}")),
            _ => None,
        };
        Ok(EvalRow {
            id: x.id().to_string(),
            method: Some(label.method()),
            label: Some(label),
            target: Some(target.get()),
            before: Some(before),
            after: Some(report.best),
            f1_before: f1_before.ok(),
            f1_after: f1_after.ok(),
            auc_before: auc_before.ok(),
            auc_after: auc_after.ok(),
            skipped: reason,
        })
    };
    Ok(run().unwrap_or_else(|e| EvalRow::skipped(x.id(), alloc::format!("{e}"))))
}

/// Evaluates every series in order. Every series must carry labels.
pub fn evaluate<S: ShapeScorer + ?Sized>(
    corpus: &[TimeSeries],
    scorer: &S,
    cfg: &TuneConfig,
    train_fraction: f64,
) -> Result<EvalReport> {
    if let Some(x) = corpus.iter().find(|x| x.labels().is_none()) {
        return Err(Error::Unlabeled(x.id().to_string()));
    }
    let rows = corpus.iter().map(|x| evaluate_series(x, scorer, cfg, train_fraction)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(rows))
}
