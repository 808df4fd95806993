//! Domain types shared by detectors, tuner and service.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regularly sampled univariate series.
///
/// Values are always finite. Labels, when present, mark ground-truth
/// anomalies and are only consulted by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TimeSeries {
    id: String,
    start: i64,
    step: i64,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u8>>,
}

#[derive(Deserialize)]
struct RawSeries {
    id: String,
    start: i64,
    step: i64,
    values: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<u8>>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        let ts = TimeSeries::new(raw.id, raw.start, raw.step, raw.values)?;
        match raw.labels {
            Some(l) => ts.with_labels(l),
            None => Ok(ts),
        }
    }
}

impl fmt::Display for TimeSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} points, step {}s)", self.id, self.values.len(), self.step)
    }
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, start: i64, step: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if step <= 0 {
            return Err(Error::InvalidParam {
                name: "step".to_string(),
                reason: "must be a positive number of seconds".to_string(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(TimeSeries { id: id.into(), start, step, values, labels: None })
    }

    /// Convenience constructor for in-memory data (start 0, step 60).
    pub fn from_values(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(id, 0, 60, values)
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), found: labels.len() });
        }
        if let Some(i) = labels.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParam {
                name: "labels".to_string(),
                reason: alloc::format!("entry {i} is not 0 or 1"),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> i64 {
        self.start + self.step * i as i64
    }

    /// Contiguous sub-series `[from, to)`, labels carried along.
    pub fn slice(&self, from: usize, to: usize, id: impl Into<String>) -> Result<TimeSeries> {
        let ts = TimeSeries::new(id, self.timestamp(from), self.step, self.values[from..to].to_vec())?;
        match &self.labels {
            Some(l) => ts.with_labels(l[from..to].to_vec()),
            None => Ok(ts),
        }
    }
}

/// Per-point upper and lower envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl Boundary {
    pub fn new(upper: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        if upper.len() != lower.len() {
            return Err(Error::LengthMismatch { expected: upper.len(), found: lower.len() });
        }
        Ok(Boundary { upper, lower })
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn is_ordered(&self) -> bool {
        self.upper.iter().zip(&self.lower).all(|(u, l)| u >= l)
    }
}

/// One bit per point; 1 marks an anomaly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnomalyMask(Vec<u8>);

impl AnomalyMask {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        AnomalyMask(bits.into_iter().map(|b| (b != 0) as u8).collect())
    }

    pub fn from_bools(flags: impl IntoIterator<Item = bool>) -> Self {
        AnomalyMask(flags.into_iter().map(u8::from).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Fraction of flagged points, `count / len`.
    pub fn ratio(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.0.len() as f64
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b == 1).map(|(i, _)| i)
    }
}

/// Flags points strictly outside the boundary.
pub fn to_mask(values: &[f64], boundary: &Boundary) -> Result<AnomalyMask> {
    if boundary.upper.len() != values.len() {
        return Err(Error::LengthMismatch { expected: values.len(), found: boundary.upper.len() });
    }
    if boundary.lower.len() != values.len() {
        return Err(Error::LengthMismatch { expected: values.len(), found: boundary.lower.len() });
    }
    Ok(AnomalyMask::from_bools(
        values
            .iter()
            .zip(boundary.upper.iter().zip(&boundary.lower))
            .map(|(x, (u, l))| x > u || x < l),
    ))
}

/// Result of running one detector over one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub forecast: Option<Vec<f64>>,
    pub boundary: Boundary,
    pub anomalies: AnomalyMask,
    pub realized_ratio: f64,
    /// Fallbacks taken while fitting, e.g. an empirical tail quantile.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl DetectionOutcome {
    /// Builds the outcome whose mask is exactly `to_mask(values, boundary)`.
    pub fn from_boundary(values: &[f64], forecast: Option<Vec<f64>>, boundary: Boundary) -> Result<Self> {
        let anomalies = to_mask(values, &boundary)?;
        let realized_ratio = anomalies.ratio();
        Ok(DetectionOutcome { forecast, boundary, anomalies, realized_ratio, notes: Vec::new() })
    }

    /// Per-point severity `max(x - u, l - x, 0)`.
    pub fn exceedance(&self, values: &[f64]) -> Vec<f64> {
        exceedance(values, &self.boundary)
    }
}

pub fn exceedance(values: &[f64], boundary: &Boundary) -> Vec<f64> {
    values
        .iter()
        .zip(boundary.upper.iter().zip(&boundary.lower))
        .map(|(x, (u, l))| f64::max(f64::max(x - u, l - x), 0.0))
        .collect()
}

/// The three production detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Random,
    Sparse,
    Seasonal,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Random, Method::Sparse, Method::Seasonal];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Sparse => "sparse",
            Method::Seasonal => "seasonal",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Method::Random),
            "sparse" => Ok(Method::Sparse),
            "seasonal" => Ok(Method::Seasonal),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            ParamValue::Choice(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            ParamValue::Float(f) if libm::trunc(*f) == *f => Some(*f as i64),
            _ => None,
        }
    }

    pub fn as_choice(&self) -> Option<&str> {
        match self {
            ParamValue::Choice(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Choice(s) => f.write_str(s),
        }
    }
}

/// Named parameter assignment for one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub method: Method,
    pub params: BTreeMap<String, ParamValue>,
}

impl ParamSet {
    pub fn new(method: Method) -> Self {
        ParamSet { method, params: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: ParamValue) {
        self.params.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.params.get(name)
    }

    pub fn float(&self, name: &str) -> Result<f64> {
        self.get(name).and_then(ParamValue::as_f64).ok_or_else(|| missing(name, "a number"))
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        self.get(name).and_then(ParamValue::as_int).ok_or_else(|| missing(name, "an integer"))
    }

    pub fn choice(&self, name: &str) -> Result<&str> {
        self.get(name).and_then(ParamValue::as_choice).ok_or_else(|| missing(name, "a token"))
    }
}

fn missing(name: &str, kind: &str) -> Error {
    Error::InvalidParam { name: name.to_string(), reason: alloc::format!("missing or not {kind}") }
}

/// Expected anomaly ratio `p`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SensitivityTarget(f64);

impl SensitivityTarget {
    pub const DEFAULT: SensitivityTarget = SensitivityTarget(0.01);

    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(SensitivityTarget(p))
        } else {
            Err(Error::InvalidTarget(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for SensitivityTarget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for SensitivityTarget {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        SensitivityTarget::new(p)
    }
}

impl From<SensitivityTarget> for f64 {
    fn from(t: SensitivityTarget) -> f64 {
        t.0
    }
}

/// Pattern class selecting the detector; only seasonal series carry a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "label")]
pub enum PatternLabel {
    Seasonal { period: usize },
    Sparse,
    Random,
}

impl PatternLabel {
    pub fn method(self) -> Method {
        match self {
            PatternLabel::Seasonal { .. } => Method::Seasonal,
            PatternLabel::Sparse => Method::Sparse,
            PatternLabel::Random => Method::Random,
        }
    }

    pub fn period(self) -> Option<usize> {
        match self {
            PatternLabel::Seasonal { period } => Some(period),
            _ => None,
        }
    }
}
