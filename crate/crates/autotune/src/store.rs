//! Directory-backed state: one JSON document per job, a JSONL feedback log,
//! the feedback review queue, the shape corpus and the scorer model.
//!
//! ```text
//! <root>/jobs/<job_id>.json
//! <root>/feedback.jsonl
//! <root>/review_queue.jsonl
//! <root>/corpus.jsonl
//! <root>/scorer.json
//! ```

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use autotune_core::finetune::FineTune;
use autotune_core::sensitivity::{CandidateSet, ThresholdCurve};
use autotune_core::shape::{Origin, ShapeSample};
use autotune_core::{DetectionOutcome, ParamSet, PatternLabel, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::formats::{append_jsonl, read_json, read_jsonl, to_json, write_atomic, write_jsonl};

pub const STORE_ENV: &str = "AUTOTUNE_STORE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub series: TimeSeries,
    pub sensitivity: f64,
    pub label: PatternLabel,
    pub params: ParamSet,
    pub outcome: DetectionOutcome,
    pub curve: ThresholdCurve,
    pub candidates: CandidateSet,
    /// Unix seconds.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub job_id: String,
    pub fine_tune: FineTune,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub accepted: bool,
    pub timestamp: u64,
}

impl FeedbackRecord {
    pub fn sample(&self) -> ShapeSample {
        ShapeSample { x: self.x.clone(), u: self.u.clone(), l: self.l.clone(), score: 1.0, origin: Origin::Feedback }
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub struct Store {
    root: PathBuf,
    writes: Mutex<()>,
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(AppError::UnknownJob(id.to_string()))
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        let jobs = root.join("jobs");
        std::fs::create_dir_all(&jobs).map_err(|e| AppError::io(&jobs, e))?;
        Ok(Store { root, writes: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn model_path(&self) -> PathBuf {
        self.root.join("scorer.json")
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }

    pub fn queue_path(&self) -> PathBuf {
        self.root.join("review_queue.jsonl")
    }

    pub fn feedback_path(&self) -> PathBuf {
        self.root.join("feedback.jsonl")
    }

    fn job_path(&self, id: &str) -> PathBuf {
        self.root.join("jobs").join(format!("{id}.json"))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.writes.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn save_job(&self, job: &Job) -> Result<()> {
        check_id(&job.job_id)?;
        let bytes = to_json(job)?;
        let _g = self.lock();
        write_atomic(&self.job_path(&job.job_id), bytes.as_bytes())
    }

    /// The stored document, byte for byte.
    pub fn job_bytes(&self, id: &str) -> Result<Vec<u8>> {
        check_id(id)?;
        let path = self.job_path(id);
        std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AppError::UnknownJob(id.to_string()),
            _ => AppError::io(path, e),
        })
    }

    pub fn load_job(&self, id: &str) -> Result<Job> {
        check_id(id)?;
        let path = self.job_path(id);
        if !path.exists() {
            return Err(AppError::UnknownJob(id.to_string()));
        }
        read_json(&path)
    }

    pub fn append_feedback(&self, rec: &FeedbackRecord) -> Result<()> {
        let _g = self.lock();
        append_jsonl(&self.feedback_path(), rec)
    }

    pub fn feedback(&self) -> Result<Vec<FeedbackRecord>> {
        read_jsonl(&self.feedback_path())
    }

    /// Marks the job's latest feedback accepted and queues its boundary for
    /// review. Returns false when that record was already accepted.
    pub fn accept(&self, job_id: &str) -> Result<bool> {
        check_id(job_id)?;
        let _g = self.lock();
        let mut log: Vec<FeedbackRecord> = read_jsonl(&self.feedback_path())?;
        let Some(i) = log.iter().rposition(|r| r.job_id == job_id) else {
            return Err(AppError::NoFeedback(job_id.to_string()));
        };
        if log[i].accepted {
            return Ok(false);
        }
        log[i].accepted = true;
        append_jsonl(&self.queue_path(), &log[i].sample())?;
        write_jsonl(&self.feedback_path(), &log)?;
        Ok(true)
    }

    pub fn queue(&self) -> Result<Vec<ShapeSample>> {
        read_jsonl(&self.queue_path())
    }

    pub fn set_queue(&self, items: &[ShapeSample]) -> Result<()> {
        let _g = self.lock();
        write_jsonl(&self.queue_path(), items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_cannot_escape_the_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        for id in ["../x", "a/b", "", "a.json"] {
            assert!(matches!(store.job_bytes(id), Err(AppError::UnknownJob(_))), "{id}");
        }
        assert!(matches!(store.load_job("nope"), Err(AppError::UnknownJob(_))));
    }

    #[test]
    fn accept_requires_feedback_and_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(matches!(store.accept("j1"), Err(AppError::NoFeedback(_))));
        let rec = FeedbackRecord {
            job_id: "j1".into(),
            fine_tune: FineTune::default(),
            x: vec![1.0, 2.0],
            u: vec![3.0, 3.0],
            l: vec![0.0, 0.0],
            accepted: false,
            timestamp: 0,
        };
        store.append_feedback(&rec).unwrap();
        assert!(store.accept("j1").unwrap());
        assert!(!store.accept("j1").unwrap());
        let q = store.queue().unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].origin, Origin::Feedback);
        assert!(store.feedback().unwrap()[0].accepted);
    }
}
