//! Learned boundary-shape score.
//!
//! A detection result `(x, u, l)` is rendered as a three-channel Gramian
//! angular summation field and scored in `[0, 1]` by a small convolutional
//! network trained on synthetic good and corrupted boundaries.

mod cnn;
mod encode;
pub mod synth;
mod train;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cnn::{loss, loss_and_gradient, Architecture, Network};
pub use encode::{encode, gasf, gasf_normalized, normalize, paa, GasfImage, DEFAULT_WIDTH};
pub use synth::{generate, synth_corpus, BaseKind, Corruption, SynthSeries, SynthSpec};
pub use train::{train_scorer, ScorerModel, TrainConfig, TrainingMeta, ARCH_VERSION, MIN_CORPUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Origin {
    SynthGood,
    SynthBad { kind: Corruption },
    Manual,
    Feedback,
}

/// One labelled detection result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub l: Vec<f64>,
    pub score: f64,
    pub origin: Origin,
}

impl ShapeSample {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidParam { name: "score".into(), reason: "must lie in [0, 1]".into() });
        }
        if self.x.len() < 2 {
            return Err(Error::TooShort { needed: 2, found: self.x.len() });
        }
        for s in [&self.u, &self.l] {
            if s.len() != self.x.len() {
                return Err(Error::LengthMismatch { expected: self.x.len(), found: s.len() });
            }
        }
        if let Some(i) = self.x.iter().chain(&self.u).chain(&self.l).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i % self.x.len() });
        }
        Ok(())
    }

    /// Identity of the detection result, ignoring its score and origin.
    pub fn key(&self) -> u64 {
        let mut h = Fnv::new();
        for s in [&self.x, &self.u, &self.l] {
            h.write_u64(s.len() as u64);
            for v in s.iter() {
                h.write_u64(v.to_bits());
            }
        }
        h.finish()
    }
}

/// Anything that scores a boundary against its data.
pub trait ShapeScorer {
    fn score(&self, x: &[f64], u: &[f64], l: &[f64]) -> Result<f64>;
}

/// FNV-1a over every sample's content and score, in order.
pub fn corpus_hash(corpus: &[ShapeSample]) -> u64 {
    let mut h = Fnv::new();
    for s in corpus {
        h.write_u64(s.key());
        h.write_u64(s.score.to_bits());
    }
    h.finish()
}

/// Appends samples whose `(x, u, l)` is not already present. Returns how many
/// were added.
pub fn merge_samples(corpus: &mut Vec<ShapeSample>, extra: impl IntoIterator<Item = ShapeSample>) -> usize {
    let mut seen: Vec<u64> = corpus.iter().map(ShapeSample::key).collect();
    seen.sort_unstable();
    let before = corpus.len();
    for s in extra {
        let k = s.key();
        if let Err(at) = seen.binary_search(&k) {
            seen.insert(at, k);
            corpus.push(s);
        }
    }
    corpus.len() - before
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
