//! Series ingestion from `timestamp,value,label` CSV or JSON.

use std::io::Write;
use std::path::Path;

use autotune_core::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// JSON series as accepted on input; everything but `values` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInput {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub start: Option<i64>,
    #[serde(default)]
    pub step: Option<i64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub labels: Option<Vec<u8>>,
}

impl SeriesInput {
    pub fn into_series(self, fallback_id: &str) -> Result<TimeSeries> {
        let id = self.id.unwrap_or_else(|| fallback_id.to_string());
        let x = TimeSeries::new(id, self.start.unwrap_or(0), self.step.unwrap_or(1), self.values)?;
        Ok(match self.labels {
            Some(l) => x.with_labels(l)?,
            None => x,
        })
    }
}

#[derive(Clone, Copy)]
struct Columns {
    timestamp: Option<usize>,
    value: usize,
    label: Option<usize>,
}

impl Columns {
    fn positional(width: usize) -> Columns {
        match width {
            1 => Columns { timestamp: None, value: 0, label: None },
            2 => Columns { timestamp: Some(0), value: 1, label: None },
            _ => Columns { timestamp: Some(0), value: 1, label: Some(2) },
        }
    }

    fn from_header(header: &csv::StringRecord) -> Result<Columns> {
        let find = |name: &str| header.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        let value = find("value").ok_or_else(|| AppError::Ingest("CSV header has no `value` column".into()))?;
        Ok(Columns { timestamp: find("timestamp"), value, label: find("label") })
    }
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<&str> {
    rec.get(i).map(str::trim).ok_or_else(|| AppError::Ingest(format!("line {line}: missing column {}", i + 1)))
}

/// Parses CSV text. A header row is optional; without one the columns are
/// read as `value`, `timestamp,value` or `timestamp,value,label`.
/// Timestamps must be integers with a constant positive step.
pub fn parse_csv(text: &str, id: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| AppError::Ingest(format!("CSV: {e}")))?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        records.push(rec);
    }
    let Some(first) = records.first() else {
        return Err(AppError::Ingest("CSV has no rows".into()));
    };
    let is_header = first.iter().any(|f| f.trim().eq_ignore_ascii_case("value"));
    let cols = if is_header { Columns::from_header(first)? } else { Columns::positional(first.len()) };
    let body = &records[is_header as usize..];

    let mut stamps = Vec::new();
    let mut values = Vec::with_capacity(body.len());
    let mut labels = Vec::new();
    for (k, rec) in body.iter().enumerate() {
        let line = k + 1 + is_header as usize;
        let v = field(rec, cols.value, line)?;
        values.push(v.parse::<f64>().map_err(|_| AppError::Ingest(format!("line {line}: bad value `{v}`")))?);
        if let Some(c) = cols.timestamp {
            let t = field(rec, c, line)?;
            stamps.push(t.parse::<i64>().map_err(|_| AppError::Ingest(format!("line {line}: bad timestamp `{t}`")))?);
        }
        if let Some(c) = cols.label {
            let y = field(rec, c, line)?;
            labels.push(match y {
                "0" => 0,
                "1" => 1,
                _ => return Err(AppError::Ingest(format!("line {line}: label must be 0 or 1, got `{y}`"))),
            });
        }
    }
    let (start, step) = match stamps.as_slice() {
        [] => (0, 1),
        [t] => (*t, 1),
        [t0, t1, ..] => {
            let step = t1 - t0;
            if step <= 0 {
                return Err(AppError::Ingest("timestamps must increase".into()));
            }
            if let Some(i) = stamps.windows(2).position(|w| w[1] - w[0] != step) {
                return Err(AppError::Ingest(format!("irregular timestamp step after line {}", i + 2)));
            }
            (*t0, step)
        }
    };
    let x = TimeSeries::new(id, start, step, values)?;
    Ok(if cols.label.is_some() { x.with_labels(labels)? } else { x })
}

pub fn write_csv(x: &TimeSeries, out: &mut impl Write) -> std::io::Result<()> {
    match x.labels() {
        Some(labels) => {
            writeln!(out, "timestamp,value,label")?;
            for (i, (v, y)) in x.values().iter().zip(labels).enumerate() {
                writeln!(out, "{},{v},{y}", x.timestamp(i))?;
            }
        }
        None => {
            writeln!(out, "timestamp,value")?;
            for (i, v) in x.values().iter().enumerate() {
                writeln!(out, "{},{v}", x.timestamp(i))?;
            }
        }
    }
    Ok(())
}

pub fn parse_json(text: &str, id: &str) -> Result<TimeSeries> {
    let input: SeriesInput = serde_json::from_str(text).map_err(|e| AppError::json("series JSON", e))?;
    input.into_series(id)
}

/// Loads a `.json` or CSV file; the id defaults to the file stem.
pub fn load_series(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        parse_json(&text, id)
    } else {
        parse_csv(&text, id)
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // one row cannot carry the step, so start at two
        #[test]
        fn csv_round_trips(
            start in -1_000_000i64..1_000_000,
            step in 1i64..10_000,
            rows in prop::collection::vec((-1e12f64..1e12, any::<bool>()), 2..60),
        ) {
            let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let labels: Vec<u8> = rows.iter().map(|r| r.1 as u8).collect();
            let x = TimeSeries::new("s", start, step, values).unwrap().with_labels(labels).unwrap();
            let mut buf = Vec::new();
            write_csv(&x, &mut buf).unwrap();
            let back = parse_csv(std::str::from_utf8(&buf).unwrap(), "s").unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
