//! Job lifecycle shared by the HTTP API and the CLI.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use autotune_core::finetune::{self, FineTune};
use autotune_core::sensitivity::{CandidateSet, ThresholdCurve};
use autotune_core::shape::ScorerModel;
use autotune_core::tuner::{auto, TuneConfig};
use autotune_core::{DetectionOutcome, SensitivityTarget, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::store::{unix_now, FeedbackRecord, Job, Store};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveView {
    pub curve: ThresholdCurve,
    pub candidates: CandidateSet,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accepted {
    /// False when the latest feedback had already been accepted.
    pub queued: bool,
    pub queue_len: usize,
}

pub struct Service {
    store: Store,
    scorer: Arc<ScorerModel>,
    cfg: TuneConfig,
    jobs: RwLock<HashMap<String, Arc<Job>>>,
}

impl Service {
    pub fn new(store: Store, scorer: ScorerModel, cfg: TuneConfig) -> Service {
        Service { store, scorer: Arc::new(scorer), cfg, jobs: RwLock::new(HashMap::new()) }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn scorer(&self) -> &ScorerModel {
        &self.scorer
    }

    /// Classifies, tunes and detects, then persists the job.
    pub fn submit(&self, series: TimeSeries, sensitivity: f64) -> Result<Job> {
        let target = SensitivityTarget::new(sensitivity)?;
        let r = auto(&series, target, self.scorer.as_ref(), &self.cfg)?;
        let job = Job {
            job_id: uuid::Uuid::new_v4().to_string(),
            series,
            sensitivity,
            label: r.label,
            params: r.report.best,
            outcome: r.outcome,
            curve: r.report.curve,
            candidates: r.report.candidates,
            created_at: unix_now(),
        };
        self.store.save_job(&job)?;
        self.jobs.write().unwrap_or_else(|e| e.into_inner()).insert(job.job_id.clone(), Arc::new(job.clone()));
        Ok(job)
    }

    /// Cached job, loaded from the store on first use.
    pub fn job(&self, id: &str) -> Result<Arc<Job>> {
        if let Some(j) = self.jobs.read().unwrap_or_else(|e| e.into_inner()).get(id) {
            return Ok(j.clone());
        }
        let job = Arc::new(self.store.load_job(id)?);
        self.jobs.write().unwrap_or_else(|e| e.into_inner()).insert(id.to_string(), job.clone());
        Ok(job)
    }

    pub fn job_bytes(&self, id: &str) -> Result<Vec<u8>> {
        self.store.job_bytes(id)
    }

    /// Adjusts the cached outcome and logs the result as unaccepted feedback.
    pub fn finetune(&self, id: &str, ft: &FineTune) -> Result<DetectionOutcome> {
        let job = self.job(id)?;
        let out = finetune::apply(job.series.values(), &job.outcome, ft)?;
        self.store.append_feedback(&FeedbackRecord {
            job_id: job.job_id.clone(),
            fine_tune: *ft,
            x: job.series.values().to_vec(),
            u: out.boundary.upper.clone(),
            l: out.boundary.lower.clone(),
            accepted: false,
            timestamp: unix_now(),
        })?;
        Ok(out)
    }

    pub fn accept(&self, id: &str) -> Result<Accepted> {
        self.job(id)?;
        let queued = self.store.accept(id)?;
        Ok(Accepted { queued, queue_len: self.store.queue()?.len() })
    }

    pub fn curve(&self, id: &str) -> Result<CurveView> {
        let job = self.job(id)?;
        Ok(CurveView {
            curve: job.curve.clone(),
            candidates: job.candidates.clone(),
            threshold: job.params.float(autotune_core::detectors::THRESHOLD)?,
        })
    }
}
