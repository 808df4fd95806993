//! Forecast-error losses and detection quality measures.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AnomalyMask;
use crate::stats;

/// Targets with magnitude below this are left out of MAPE.
pub const MAPE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    MAE,
    MEDAE,
    RMSE,
    MAPE,
}

pub fn prediction_error(kind: MetricKind, target: &[f64], pred: &[f64]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::Empty);
    }
    if target.len() != pred.len() {
        return Err(Error::LengthMismatch { expected: target.len(), found: pred.len() });
    }
    let abs_err = || target.iter().zip(pred).map(|(t, p)| libm::fabs(t - p));
    let n = target.len() as f64;
    Ok(match kind {
        MetricKind::MAE => abs_err().sum::<f64>() / n,
        MetricKind::MEDAE => stats::median(&abs_err().collect::<Vec<_>>()),
        MetricKind::RMSE => libm::sqrt(abs_err().map(|e| e * e).sum::<f64>() / n),
        MetricKind::MAPE => {
            let (sum, kept) = target
                .iter()
                .zip(pred)
                .filter(|(t, _)| libm::fabs(**t) >= MAPE_EPSILON)
                .fold((0.0, 0usize), |(s, k), (t, p)| (s + libm::fabs((t - p) / t), k + 1));
            if kept == 0 {
                return Err(Error::AllSkipped);
            }
            100.0 * sum / kept as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub fn confusion(mask: &AnomalyMask, labels: &[u8]) -> Result<Confusion> {
    if mask.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), found: mask.len() });
    }
    let mut c = Confusion::default();
    for (&m, &y) in mask.bits().iter().zip(labels) {
        match (m == 1, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Point-wise F1 of a detection mask against ground-truth labels.
pub fn pointwise_f1(mask: &AnomalyMask, labels: &[u8]) -> Result<f64> {
    let c = confusion(mask, labels)?;
    if c.tp + c.fn_ == 0 {
        return Err(Error::Undefined);
    }
    let precision = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// ROC area from the Mann-Whitney rank statistic; tied scores count half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), found: scores.len() });
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average ranks (1-based) over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}
