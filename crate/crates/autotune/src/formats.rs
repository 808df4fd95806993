//! On-disk formats: shape corpora as JSONL, scorer models as JSON.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use autotune_core::shape::{ScorerModel, ShapeSample};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{AppError, Result};

/// Pretty JSON with a trailing newline; the byte-stable output format.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AppError::json("serialize", e))?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::json(path.display().to_string(), e))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(AppError::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AppError::json(format!("{}:{}", path.display(), i + 1), e))?);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|e| AppError::json("serialize", e))?;
        buf.push(b'\n');
    }
    Ok(buf)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, &jsonl_bytes(items)?)
}

/// Appends one line. The caller serializes concurrent writers.
pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut line = serde_json::to_vec(item).map_err(|e| AppError::json("serialize", e))?;
    line.push(b'\n');
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| AppError::io(path, e))?;
    f.write_all(&line).map_err(|e| AppError::io(path, e))
}

pub fn read_corpus(path: &Path) -> Result<Vec<ShapeSample>> {
    if !path.exists() {
        return Err(AppError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let corpus: Vec<ShapeSample> = read_jsonl(path)?;
    for s in &corpus {
        s.validate()?;
    }
    Ok(corpus)
}

/// Loads and validates a model; other architecture versions are rejected.
pub fn read_model(path: &Path) -> Result<ScorerModel> {
    if !path.exists() {
        return Err(AppError::NoModel(path.to_path_buf()));
    }
    let model: ScorerModel = read_json(path)?;
    model.validate()?;
    Ok(model)
}
