//! Error type shared by every engine operation.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A series or sequence with no elements.
    Empty,
    /// A non-finite value at the given index.
    NonFinite { index: usize },
    LengthMismatch { expected: usize, found: usize },
    TooShort { needed: usize, found: usize },
    WindowTooLarge { window: usize, len: usize },
    PeriodTooLarge { period: usize, seasons: usize, len: usize },
    /// MAPE where every target is (numerically) zero.
    AllSkipped,
    /// F1 with no positive label.
    Undefined,
    OneClassOnly,
    UnknownMethod(String),
    InvalidParam { name: String, reason: String },
    BadWidth(usize),
    DegenerateRange,
    CorpusTooSmall { needed: usize, found: usize },
    /// Validation loss never dropped below its starting value.
    Diverged { initial: f64, best: f64 },
    TooFewPoints { needed: usize, found: usize },
    NonMonotoneCurve { index: usize },
    InvalidTarget(f64),
    InvalidBaselines { upper: f64, lower: f64 },
    Unlabeled(String),
    ArchitectureMismatch { expected: String, found: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Empty => write!(f, "empty input"),
            Error::NonFinite { index } => write!(f, "non-finite value at index {index}"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::TooShort { needed, found } => {
                write!(f, "input too short: need at least {needed} points, found {found}")
            }
            Error::WindowTooLarge { window, len } => {
                write!(f, "window {window} too large for series of length {len}")
            }
            Error::PeriodTooLarge { period, seasons, len } => write!(
                f,
                "{seasons} seasons of period {period} do not fit a series of length {len}"
            ),
            Error::AllSkipped => write!(f, "every target value is zero; MAPE is undefined"),
            Error::Undefined => write!(f, "F1 undefined: labels contain no anomaly"),
            Error::OneClassOnly => write!(f, "AUC undefined: labels contain a single class"),
            Error::UnknownMethod(m) => write!(f, "unknown detection method `{m}`"),
            Error::InvalidParam { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::BadWidth(w) => write!(f, "PAA width must be at least 2, got {w}"),
            Error::DegenerateRange => write!(f, "degenerate value range (all inputs constant)"),
            Error::CorpusTooSmall { needed, found } => {
                write!(f, "corpus too small: need {needed} samples with both score tiers, found {found}")
            }
            Error::Diverged { initial, best } => write!(
                f,
                "training diverged: best validation loss {best} is not below initial loss {initial}"
            ),
            Error::TooFewPoints { needed, found } => {
                write!(f, "curve needs at least {needed} points, found {found}")
            }
            Error::NonMonotoneCurve { index } => {
                write!(f, "anomaly ratio increases at curve index {index}")
            }
            Error::InvalidTarget(p) => write!(f, "sensitivity must lie strictly in (0, 1), got {p}"),
            Error::InvalidBaselines { upper, lower } => {
                write!(f, "upper baseline {upper} is below lower baseline {lower}")
            }
            Error::Unlabeled(id) => write!(f, "series `{id}` has no labels"),
            Error::ArchitectureMismatch { expected, found } => {
                write!(f, "scorer architecture mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
