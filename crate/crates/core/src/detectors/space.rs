//! Declared parameter spaces and typed parameter views for each detector.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Method, ParamSet, ParamValue};

/// Which tuning objective owns a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuneTarget {
    Shape,
    Prediction,
    Sensitivity,
    ShapePlusPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamKind {
    Float { min: f64, max: f64, min_inclusive: bool, max_inclusive: bool },
    Int { min: i64, max: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub kind: ParamKind,
    pub default: ParamValue,
    pub tuned_by: TuneTarget,
    /// Candidate values searched by the tuner. Empty for the sensitivity
    /// parameter, whose grid comes from the sensitivity configuration.
    pub grid: Vec<ParamValue>,
}

impl ParamEntry {
    pub fn check(&self, v: &ParamValue) -> Result<()> {
        let bad = |reason: String| Error::InvalidParam { name: self.name.clone(), reason };
        match &self.kind {
            ParamKind::Float { min, max, min_inclusive, max_inclusive } => {
                let x = v.as_f64().ok_or_else(|| bad("expected a number".into()))?;
                let lo_ok = if *min_inclusive { x >= *min } else { x > *min };
                let hi_ok = if *max_inclusive { x <= *max } else { x < *max };
                if !(lo_ok && hi_ok) {
                    return Err(bad(alloc::format!("{x} outside [{min}, {max}]")));
                }
            }
            ParamKind::Int { min, max } => {
                let x = v.as_int().ok_or_else(|| bad("expected an integer".into()))?;
                if x < *min || x > *max {
                    return Err(bad(alloc::format!("{x} outside [{min}, {max}]")));
                }
            }
            ParamKind::Categorical { choices } => {
                let x = v.as_choice().ok_or_else(|| bad("expected a token".into()))?;
                if !choices.iter().any(|c| c == x) {
                    return Err(bad(alloc::format!("`{x}` is not one of {choices:?}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub method: Method,
    pub entries: Vec<ParamEntry>,
}

pub const THRESHOLD: &str = "threshold";
pub const THRESHOLD_MIN: f64 = 0.5;
pub const THRESHOLD_MAX: f64 = 10.0;

fn float_entry(name: &str, min: f64, max: f64, incl: bool, default: f64, by: TuneTarget, grid: &[f64]) -> ParamEntry {
    ParamEntry {
        name: name.to_string(),
        kind: ParamKind::Float { min, max, min_inclusive: incl, max_inclusive: incl },
        default: ParamValue::Float(default),
        tuned_by: by,
        grid: grid.iter().map(|&v| ParamValue::Float(v)).collect(),
    }
}

fn int_entry(name: &str, min: i64, max: i64, default: i64, by: TuneTarget, grid: &[i64]) -> ParamEntry {
    ParamEntry {
        name: name.to_string(),
        kind: ParamKind::Int { min, max },
        default: ParamValue::Int(default),
        tuned_by: by,
        grid: grid.iter().map(|&v| ParamValue::Int(v)).collect(),
    }
}

fn threshold_entry(default: f64) -> ParamEntry {
    float_entry(THRESHOLD, THRESHOLD_MIN, THRESHOLD_MAX, true, default, TuneTarget::Sensitivity, &[])
}

/// Parameter space by method name; unknown names are rejected.
pub fn param_space(method: &str) -> Result<ParamSpace> {
    Ok(ParamSpace::for_method(method.parse()?))
}

impl ParamSpace {
    pub fn for_method(method: Method) -> ParamSpace {
        use TuneTarget::*;
        let entries = match method {
            Method::Random => vec![
                ParamEntry {
                    name: "average".to_string(),
                    kind: ParamKind::Categorical { choices: vec!["mean".to_string(), "median".to_string()] },
                    default: ParamValue::Choice("mean".to_string()),
                    tuned_by: Shape,
                    grid: vec![ParamValue::Choice("mean".to_string()), ParamValue::Choice("median".to_string())],
                },
                int_entry("window_size", 5, 512, 30, Shape, &[5, 10, 20, 30, 60, 120]),
                threshold_entry(3.0),
            ],
            Method::Sparse => vec![
                float_entry("trunc_quantile", 0.5, 1.0, false, 0.95, Shape, &[0.9, 0.95, 0.98, 0.99]),
                float_entry("init_ratio", 0.0, 0.2, false, 0.01, Shape, &[0.005, 0.01, 0.02, 0.05]),
                threshold_entry(1.0),
            ],
            Method::Seasonal => vec![
                int_entry("seasonal_w", 1, i64::MAX, 2, Prediction, &[2, 3, 4]),
                int_entry("trend_w", 3, i64::MAX, 11, Prediction, &[5, 11, 25]),
                int_entry("resid_w", 8, i64::MAX, 60, Prediction, &[30, 60, 120]),
                threshold_entry(3.0),
            ],
        };
        ParamSpace { method, entries }
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn entry_mut(&mut self, name: &str) -> Option<&mut ParamEntry> {
        self.entries.iter_mut().find(|e| e.name == name)
    }

    pub fn tuned_by(&self, target: TuneTarget) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter().filter(move |e| e.tuned_by == target)
    }

    /// The single boundary-width parameter.
    pub fn sensitivity_param(&self) -> &ParamEntry {
        self.tuned_by(TuneTarget::Sensitivity).next().expect("every space declares a threshold")
    }

    /// Defaults for every entry; seasonal spaces also need the period.
    pub fn defaults(&self, period: Option<usize>) -> ParamSet {
        let mut ps = ParamSet::new(self.method);
        for e in &self.entries {
            ps.set(&e.name, e.default.clone());
        }
        if let (Method::Seasonal, Some(p)) = (self.method, period) {
            ps.set("period", ParamValue::Int(p as i64));
        }
        ps
    }

    /// Checks every declared entry is present and in bounds, and that no
    /// unknown names appear.
    pub fn validate(&self, ps: &ParamSet) -> Result<()> {
        if ps.method != self.method {
            return Err(Error::InvalidParam {
                name: "method".into(),
                reason: alloc::format!("expected {}, got {}", self.method, ps.method),
            });
        }
        for e in &self.entries {
            let v = ps.get(&e.name).ok_or_else(|| Error::InvalidParam {
                name: e.name.clone(),
                reason: "missing".into(),
            })?;
            e.check(v)?;
        }
        for name in ps.params.keys() {
            let known = self.entry(name).is_some() || (self.method == Method::Seasonal && name == "period");
            if !known {
                return Err(Error::InvalidParam { name: name.clone(), reason: "not in parameter space".into() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub average: Average,
    pub window_size: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseParams {
    pub trunc_quantile: f64,
    pub init_ratio: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalParams {
    pub period: usize,
    pub seasonal_w: usize,
    pub trend_w: usize,
    pub resid_w: usize,
    pub threshold: f64,
}

/// Typed view of a validated [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorParams {
    Random(RandomParams),
    Sparse(SparseParams),
    Seasonal(SeasonalParams),
}

impl DetectorParams {
    pub fn method(&self) -> Method {
        match self {
            DetectorParams::Random(_) => Method::Random,
            DetectorParams::Sparse(_) => Method::Sparse,
            DetectorParams::Seasonal(_) => Method::Seasonal,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            DetectorParams::Random(p) => p.threshold,
            DetectorParams::Sparse(p) => p.threshold,
            DetectorParams::Seasonal(p) => p.threshold,
        }
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        match &mut self {
            DetectorParams::Random(p) => p.threshold = t,
            DetectorParams::Sparse(p) => p.threshold = t,
            DetectorParams::Seasonal(p) => p.threshold = t,
        }
        self
    }

    pub fn to_param_set(&self) -> ParamSet {
        match *self {
            DetectorParams::Random(p) => ParamSet::new(Method::Random)
                .with(
                    "average",
                    ParamValue::Choice(match p.average {
                        Average::Mean => "mean".to_string(),
                        Average::Median => "median".to_string(),
                    }),
                )
                .with("window_size", ParamValue::Int(p.window_size as i64))
                .with(THRESHOLD, ParamValue::Float(p.threshold)),
            DetectorParams::Sparse(p) => ParamSet::new(Method::Sparse)
                .with("trunc_quantile", ParamValue::Float(p.trunc_quantile))
                .with("init_ratio", ParamValue::Float(p.init_ratio))
                .with(THRESHOLD, ParamValue::Float(p.threshold)),
            DetectorParams::Seasonal(p) => ParamSet::new(Method::Seasonal)
                .with("period", ParamValue::Int(p.period as i64))
                .with("seasonal_w", ParamValue::Int(p.seasonal_w as i64))
                .with("trend_w", ParamValue::Int(p.trend_w as i64))
                .with("resid_w", ParamValue::Int(p.resid_w as i64))
                .with(THRESHOLD, ParamValue::Float(p.threshold)),
        }
    }
}

impl TryFrom<&ParamSet> for DetectorParams {
    type Error = Error;

    fn try_from(ps: &ParamSet) -> Result<Self> {
        ParamSpace::for_method(ps.method).validate(ps)?;
        let usize_of = |name: &str| -> Result<usize> { Ok(ps.int(name)? as usize) };
        Ok(match ps.method {
            Method::Random => DetectorParams::Random(RandomParams {
                average: match ps.choice("average")? {
                    "median" => Average::Median,
                    _ => Average::Mean,
                },
                window_size: usize_of("window_size")?,
                threshold: ps.float(THRESHOLD)?,
            }),
            Method::Sparse => DetectorParams::Sparse(SparseParams {
                trunc_quantile: ps.float("trunc_quantile")?,
                init_ratio: ps.float("init_ratio")?,
                threshold: ps.float(THRESHOLD)?,
            }),
            Method::Seasonal => {
                let period = ps.int("period")?;
                if period < 2 {
                    return Err(Error::InvalidParam { name: "period".into(), reason: "must be >= 2".into() });
                }
                let trend_w = usize_of("trend_w")?;
                if trend_w % 2 == 0 {
                    return Err(Error::InvalidParam { name: "trend_w".into(), reason: "must be odd".into() });
                }
                DetectorParams::Seasonal(SeasonalParams {
                    period: period as usize,
                    seasonal_w: usize_of("seasonal_w")?,
                    trend_w,
                    resid_w: usize_of("resid_w")?,
                    threshold: ps.float(THRESHOLD)?,
                })
            }
        })
    }
}
