use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cnn::{self, batch_gradient, Architecture, Network, Workspace};
use super::{corpus_hash, encode, ShapeSample, ShapeScorer};
use crate::error::{Error, Result};

/// Model files carrying any other version string are rejected on load.
pub const ARCH_VERSION: &str = "gasf-cnn-v1";
pub const MIN_CORPUS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub arch: Architecture,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Architecture::default(),
            epochs: 30,
            lr: 0.01,
            momentum: 0.9,
            batch: 32,
            val_fraction: 0.2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    pub samples: usize,
    /// Hex FNV-1a digest of the training corpus.
    pub corpus_hash: String,
    pub initial_val_loss: f64,
    /// Mean mini-batch loss per epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerModel {
    pub version: String,
    pub arch: Architecture,
    pub weights: Vec<f64>,
    pub meta: TrainingMeta,
}

impl ScorerModel {
    /// Checks a deserialized model before use.
    pub fn validate(&self) -> Result<()> {
        if self.version != ARCH_VERSION {
            return Err(Error::ArchitectureMismatch { expected: ARCH_VERSION.into(), found: self.version.clone() });
        }
        self.arch.validate()?;
        let want = self.arch.param_count();
        if self.weights.len() != want {
            return Err(Error::LengthMismatch { expected: want, found: self.weights.len() });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParam { name: "weights".into(), reason: "non-finite weight".into() });
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network> {
        Network::from_params(self.arch, self.weights.clone())
    }

    pub fn score_image(&self, image: &[f64]) -> f64 {
        let mut ws = Workspace::new(&self.arch);
        cnn::forward(&self.arch, &self.weights, image, &mut ws)
    }
}

impl ShapeScorer for ScorerModel {
    fn score(&self, x: &[f64], u: &[f64], l: &[f64]) -> Result<f64> {
        let img = encode(x, u, l, self.arch.width)?;
        Ok(self.score_image(&img.data))
    }
}

/// Mean squared error of `model` over encoded samples.
fn eval_loss(a: &Architecture, p: &[f64], images: &[Vec<f64>], targets: &[f64], idx: &[usize], ws: &mut Workspace) -> f64 {
    idx.iter()
        .map(|&i| {
            let y = cnn::forward(a, p, &images[i], ws);
            (y - targets[i]) * (y - targets[i])
        })
        .sum::<f64>()
        / idx.len() as f64
}

/// Trains the scorer with mini-batch SGD and momentum on squared error,
/// keeping the weights of the best validation epoch.
pub fn train_scorer(corpus: &[ShapeSample], cfg: &TrainConfig) -> Result<ScorerModel> {
    cfg.arch.validate()?;
    if cfg.epochs == 0 || cfg.batch == 0 || !(cfg.lr > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::InvalidParam { name: "train".into(), reason: "epochs, batch and lr must be positive".into() });
    }
    if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 0.5) {
        return Err(Error::InvalidParam { name: "val_fraction".into(), reason: "must lie in (0, 0.5)".into() });
    }
    let has_high = corpus.iter().any(|s| s.score >= 0.5);
    let has_low = corpus.iter().any(|s| s.score < 0.5);
    if corpus.len() < MIN_CORPUS || !has_high || !has_low {
        return Err(Error::CorpusTooSmall { needed: MIN_CORPUS, found: corpus.len() });
    }
    let mut images = Vec::with_capacity(corpus.len());
    let mut targets = Vec::with_capacity(corpus.len());
    for s in corpus {
        s.validate()?;
        images.push(encode(&s.x, &s.u, &s.l, cfg.arch.width)?.data);
        targets.push(s.score);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (libm::ceil(corpus.len() as f64 * cfg.val_fraction) as usize).max(1);
    let (val, train) = order.split_at(n_val);
    let mut train = train.to_vec();

    let a = cfg.arch;
    let mut params = Network::init(a, cfg.seed ^ 0x9e37_79b9_7f4a_7c15)?.params;
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut ws = Workspace::new(&a);

    let initial = eval_loss(&a, &params, &images, &targets, val, &mut ws);
    let mut best = (initial, params.clone(), 0usize);
    let mut train_curve = Vec::with_capacity(cfg.epochs);
    let mut val_curve = Vec::with_capacity(cfg.epochs);
    let mut batch_imgs: Vec<&[f64]> = Vec::with_capacity(cfg.batch);
    let mut batch_tgts: Vec<f64> = Vec::with_capacity(cfg.batch);

    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in train.chunks(cfg.batch) {
            batch_imgs.clear();
            batch_tgts.clear();
            for &i in chunk {
                batch_imgs.push(&images[i]);
                batch_tgts.push(targets[i]);
            }
            grad.fill(0.0);
            let l = batch_gradient(&a, &params, &batch_imgs, &batch_tgts, &mut ws, &mut grad);
            total += l * chunk.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.lr * g;
                *p += *v;
            }
        }
        train_curve.push(total / train.len() as f64);
        let v = eval_loss(&a, &params, &images, &targets, val, &mut ws);
        val_curve.push(v);
        if v < best.0 {
            best = (v, params.clone(), epoch);
        }
    }
    if !(best.0 <= initial) {
        return Err(Error::Diverged { initial, best: best.0 });
    }
    Ok(ScorerModel {
        version: ARCH_VERSION.to_string(),
        arch: a,
        weights: best.1,
        meta: TrainingMeta {
            epochs: cfg.epochs,
            lr: cfg.lr,
            batch: cfg.batch,
            seed: cfg.seed,
            samples: corpus.len(),
            corpus_hash: alloc::format!("{:016x}", corpus_hash(corpus)),
            initial_val_loss: initial,
            train_loss: train_curve,
            val_loss: val_curve,
            best_epoch: best.2,
        },
    })
}
