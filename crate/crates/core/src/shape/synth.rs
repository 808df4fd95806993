//! Synthetic series and the labelled boundary corpus built from them.
//!
//! A series is a base pattern plus noise and injected anomalies. The ideal
//! boundary follows the base pattern at three standard deviations of the
//! series; eight families of corrupted boundaries are derived from it with
//! lower scores.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{Origin, ShapeSample};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseKind {
    SeasonalSine,
    Sparse,
    RandomWalk,
}

impl BaseKind {
    pub const ALL: [BaseKind; 3] = [BaseKind::SeasonalSine, BaseKind::Sparse, BaseKind::RandomWalk];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub base_kind: BaseKind,
    pub length: usize,
    pub noise_sigma: f64,
    /// Fraction of points replaced by anomalies, at most 0.05.
    pub anomaly_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSeries {
    pub base: Vec<f64>,
    pub values: Vec<f64>,
    /// 1 where an anomaly was injected.
    pub labels: Vec<u8>,
    /// Standard deviation of `values`; the ideal band is `base ± 3 sigma`.
    pub sigma: f64,
    pub period: Option<usize>,
}

const PERIODS: [usize; 5] = [12, 16, 24, 32, 48];
const SPARSE_EVENT_RATE: f64 = 0.04;

pub fn generate(spec: &SynthSpec) -> SynthSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.length.max(2);
    let noise_sigma = spec.noise_sigma.max(0.0);
    let noise = Normal::new(0.0, noise_sigma.max(1e-12)).unwrap();
    let mut period = None;
    let (base, mut values): (Vec<f64>, Vec<f64>) = match spec.base_kind {
        BaseKind::SeasonalSine => {
            let p = PERIODS[rng.random_range(0..PERIODS.len())];
            period = Some(p);
            let level = rng.random_range(2.0..6.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            let harmonic = rng.random_range(0.0..0.4);
            let base: Vec<f64> = (0..n)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / p as f64 + phase;
                    level + libm::sin(a) + harmonic * libm::sin(2.0 * a)
                })
                .collect();
            let values = base.iter().map(|b| b + noise.sample(&mut rng)).collect();
            (base, values)
        }
        BaseKind::Sparse => {
            let events = Exp::new(1.0).unwrap();
            let base: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < SPARSE_EVENT_RATE { 0.2 + events.sample(&mut rng) } else { 0.0 })
                .collect();
            // noise only perturbs the events so the zero floor stays exact
            let values = base
                .iter()
                .map(|b| if *b > 0.0 { (b + noise.sample(&mut rng)).max(0.05) } else { 0.0 })
                .collect();
            (base, values)
        }
        BaseKind::RandomWalk => {
            let step = Normal::new(0.0, 0.15).unwrap();
            let mut level = rng.random_range(2.0..6.0);
            let base: Vec<f64> = (0..n)
                .map(|_| {
                    level += step.sample(&mut rng);
                    level
                })
                .collect();
            let values = base.iter().map(|b| b + noise.sample(&mut rng)).collect();
            (base, values)
        }
    };
    let spike_unit = noise_sigma.max(0.1);
    let mut labels = alloc::vec![0u8; n];
    let rate = spec.anomaly_rate.clamp(0.0, 0.05);
    if rate > 0.0 {
        let count = (libm::round(rate * n as f64) as usize).max(1);
        let lo = n / 10;
        let mut slots: Vec<usize> = (lo..n).collect();
        slots.shuffle(&mut rng);
        for &i in slots.iter().take(count) {
            labels[i] = 1;
            values[i] += match spec.base_kind {
                BaseKind::Sparse => rng.random_range(6.0..12.0),
                _ => {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * rng.random_range(5.0..9.0) * spike_unit
                }
            };
        }
    }
    let sigma = crate::stats::std_dev(&values).max(1e-3);
    SynthSeries { base, values, labels, sigma, period }
}

/// Labelled series for evaluation; id is taken from the caller.
pub fn labeled_series(id: &str, spec: &SynthSpec) -> TimeSeries {
    let s = generate(spec);
    TimeSeries::from_values(id, s.values)
        .and_then(|t| t.with_labels(s.labels))
        .expect("synthetic values are finite and labels aligned")
}

/// The eight boundary corruption families, in the order they are described
/// for the training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corruption {
    InvertBounds,
    LowerAboveRaw,
    UpperBelowRaw,
    TooNarrow,
    TooBroad,
    BoundaryNoise,
    BoundaryPeaks,
    TracksRaw,
}

impl Corruption {
    pub const ALL: [Corruption; 8] = [
        Corruption::InvertBounds,
        Corruption::LowerAboveRaw,
        Corruption::UpperBelowRaw,
        Corruption::TooNarrow,
        Corruption::TooBroad,
        Corruption::BoundaryNoise,
        Corruption::BoundaryPeaks,
        Corruption::TracksRaw,
    ];

    /// 1-based family number.
    pub fn kind(self) -> usize {
        self as usize + 1
    }

    pub fn score(self) -> f64 {
        match self {
            Corruption::InvertBounds | Corruption::LowerAboveRaw | Corruption::UpperBelowRaw => 0.0,
            Corruption::TooNarrow | Corruption::TooBroad | Corruption::BoundaryNoise | Corruption::BoundaryPeaks => 0.3,
            Corruption::TracksRaw => 0.6,
        }
    }

    /// Corrupted `(u, l)` for a good sample.
    pub fn apply(self, s: &SynthSeries, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let sigma = s.sigma;
        let (u, l) = ideal_boundary(s);
        let x = &s.values;
        let width: Vec<f64> = u.iter().zip(&l).map(|(a, b)| a - b).collect();
        match self {
            Corruption::InvertBounds => (l, u),
            Corruption::LowerAboveRaw => {
                let gap = rng.random_range(1.0..3.0) * sigma;
                let lower: Vec<f64> = x.iter().map(|v| v + gap).collect();
                let upper = lower.iter().zip(&width).map(|(a, w)| a + w).collect();
                (upper, lower)
            }
            Corruption::UpperBelowRaw => {
                let gap = rng.random_range(1.0..3.0) * sigma;
                let upper: Vec<f64> = x.iter().map(|v| v - gap).collect();
                let lower = upper.iter().zip(&width).map(|(a, w)| a - w).collect();
                (upper, lower)
            }
            Corruption::TooNarrow => scaled_band(s, rng.random_range(0.05..0.3)),
            Corruption::TooBroad => scaled_band(s, rng.random_range(4.0..10.0)),
            Corruption::BoundaryNoise => {
                let noise = Normal::new(0.0, rng.random_range(1.5..3.0) * sigma).unwrap();
                let upper = u.iter().map(|v| v + noise.sample(rng)).collect();
                let lower = l.iter().map(|v| v + noise.sample(rng)).collect();
                (upper, lower)
            }
            Corruption::BoundaryPeaks => {
                let (mut upper, mut lower) = (u, l);
                let n = upper.len();
                for _ in 0..rng.random_range(1..=4) {
                    let at = rng.random_range(0..n);
                    let span = rng.random_range(1..=3usize);
                    let height = rng.random_range(8.0..20.0) * sigma;
                    let up = rng.random::<bool>();
                    for i in at..(at + span).min(n) {
                        if up {
                            upper[i] += height;
                        } else {
                            lower[i] -= height;
                        }
                    }
                }
                (upper, lower)
            }
            Corruption::TracksRaw => (
                x.iter().map(|v| v + 3.0 * sigma).collect(),
                x.iter().map(|v| v - 3.0 * sigma).collect(),
            ),
        }
    }
}

/// `base ± 3 sigma`.
pub fn ideal_boundary(s: &SynthSeries) -> (Vec<f64>, Vec<f64>) {
    scaled_band(s, 1.0)
}

fn scaled_band(s: &SynthSeries, factor: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 3.0 * s.sigma * factor;
    (s.base.iter().map(|b| b + half).collect(), s.base.iter().map(|b| b - half).collect())
}

/// One good sample per spec, plus `corruptions_per_good` corrupted variants
/// with distinct, randomly drawn families.
pub fn synth_corpus(specs: &[SynthSpec], corruptions_per_good: usize) -> Vec<ShapeSample> {
    let per = corruptions_per_good.min(Corruption::ALL.len());
    let mut out = Vec::with_capacity(specs.len() * (1 + per));
    for spec in specs {
        let s = generate(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_c0de_d00d_f00d);
        let (u, l) = ideal_boundary(&s);
        out.push(ShapeSample { x: s.values.clone(), u, l, score: 1.0, origin: Origin::SynthGood });
        let mut kinds = Corruption::ALL;
        kinds.shuffle(&mut rng);
        for kind in kinds.iter().take(per) {
            let (u, l) = kind.apply(&s, &mut rng);
            out.push(ShapeSample {
                x: s.values.clone(),
                u,
                l,
                score: kind.score(),
                origin: Origin::SynthBad { kind: *kind },
            });
        }
    }
    out
}

/// Size, corruptions per good sample and seed of the default training corpus.
pub const DEFAULT_GOODS: usize = 600;
pub const DEFAULT_CORRUPTIONS: usize = 4;
pub const DEFAULT_SEED: u64 = 42;

pub fn default_corpus() -> Vec<ShapeSample> {
    synth_corpus(&default_specs(DEFAULT_GOODS, DEFAULT_SEED), DEFAULT_CORRUPTIONS)
}

/// Specs for the default training corpus: base kinds in rotation, lengths
/// 64..192, noise 0.05..0.2, anomaly rate 1%..5%.
pub fn default_specs(count: usize, seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| SynthSpec {
            base_kind: BaseKind::ALL[i % 3],
            length: rng.random_range(64..=192),
            noise_sigma: rng.random_range(0.05..0.2),
            anomaly_rate: rng.random_range(0.01..0.05),
            seed: rng.random(),
        })
        .collect()
}

/// Labelled evaluation suite spanning the three base patterns.
pub fn eval_suite(count: usize, seed: u64) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let kind = BaseKind::ALL[i % 3];
            let spec = SynthSpec {
                base_kind: kind,
                length: rng.random_range(600..=1000),
                noise_sigma: rng.random_range(0.05..0.2),
                anomaly_rate: rng.random_range(0.005..0.02),
                seed: rng.random(),
            };
            let name = match kind {
                BaseKind::SeasonalSine => "seasonal",
                BaseKind::Sparse => "sparse",
                BaseKind::RandomWalk => "random",
            };
            labeled_series(&alloc::format!("{name}-{i:03}"), &spec)
        })
        .collect()
}
