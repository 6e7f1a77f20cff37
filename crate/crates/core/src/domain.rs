//! In-domain data selection.
//!
//! A logistic-regression discriminator over hashed character n-grams is
//! trained with golden source sentences (upsampled ten times) as positives
//! and an equally sized random sample of synthetic source sentences as
//! negatives. Synthetic records whose source scores above a threshold are
//! kept as in-domain data.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use thiserror::Error;

use crate::record::TsRecord;
use crate::rng;

/// Each golden sentence appears this many times among the positives.
pub const UPSAMPLE: usize = 10;
pub const DEFAULT_THETA: f64 = 0.5;
/// Logits are clamped to this magnitude so scores stay strictly inside
/// (0, 1).
const MAX_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("no golden sentences")]
    NoGolden,
    #[error("need {need} synthetic sentences for negatives, have {have}")]
    NotEnoughNegatives { need: usize, have: usize },
    #[error("training set must contain both in-domain and out-of-domain sentences")]
    SingleClass,
    #[error("invalid discriminator setting: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConfig {
    /// Feature space has `2^hash_bits` buckets.
    pub hash_bits: u32,
    pub min_n: usize,
    pub max_n: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { hash_bits: 20, min_n: 3, max_n: 5, epochs: 5, learning_rate: 0.1, seed: 0 }
    }
}

impl DomainConfig {
    fn validate(&self) -> Result<(), DomainError> {
        if !(1..=30).contains(&self.hash_bits) {
            return Err(DomainError::InvalidConfig("hash_bits must be in 1..=30"));
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return Err(DomainError::InvalidConfig("need 1 <= min_n <= max_n"));
        }
        if self.epochs == 0 {
            return Err(DomainError::InvalidConfig("epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(DomainError::InvalidConfig("learning_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub text: String,
    pub in_domain: bool,
}

/// Sparse feature vector sorted by bucket index, scaled to unit L2 norm.
pub fn features(text: &str, config: &DomainConfig) -> Vec<(u32, f64)> {
    let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
    chars.push(' ');
    chars.extend(text.chars());
    chars.push(' ');
    let mask = (1u64 << config.hash_bits) - 1;
    let mut buckets: Vec<u32> = Vec::new();
    for n in config.min_n..=config.max_n {
        for gram in chars.windows(n) {
            buckets.push((fnv1a(n as u8, gram) & mask) as u32);
        }
    }
    buckets.sort_unstable();
    let mut out: Vec<(u32, f64)> = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((last, count)) if *last == b => *count += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    let norm = libm::sqrt(out.iter().map(|(_, v)| v * v).sum::<f64>());
    if norm > 0.0 {
        out.iter_mut().for_each(|(_, v)| *v /= norm);
    }
    out
}

fn fnv1a(n: u8, gram: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |byte: u8| {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    feed(n);
    let mut buf = [0u8; 4];
    for c in gram {
        for &b in c.encode_utf8(&mut buf).as_bytes() {
            feed(b);
        }
    }
    h
}

fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-MAX_LOGIT, MAX_LOGIT);
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Positives: every golden sentence ten times. Negatives: a uniform sample
/// without replacement of the same size from the synthetic sentences. The
/// combined list is shuffled with `seed`.
pub fn build_discriminator_training_set<G, S>(
    golden: &[G],
    synthetic: &[S],
    seed: u64,
) -> Result<Vec<LabeledSentence>, DomainError>
where
    G: AsRef<str>,
    S: AsRef<str>,
{
    if golden.is_empty() {
        return Err(DomainError::NoGolden);
    }
    let need = golden.len() * UPSAMPLE;
    if synthetic.len() < need {
        return Err(DomainError::NotEnoughNegatives { need, have: synthetic.len() });
    }
    let mut rng = rng::seeded(seed);
    let mut set = Vec::with_capacity(2 * need);
    for g in golden {
        for _ in 0..UPSAMPLE {
            set.push(LabeledSentence { text: g.as_ref().into(), in_domain: true });
        }
    }
    for i in index::sample(&mut rng, synthetic.len(), need) {
        set.push(LabeledSentence { text: synthetic[i].as_ref().into(), in_domain: false });
    }
    set.shuffle(&mut rng);
    Ok(set)
}

/// Trained discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    config: DomainConfig,
    weights: Vec<f64>,
    bias: f64,
}

impl DomainModel {
    /// Reassembles a persisted model.
    pub fn from_parts(config: DomainConfig, weights: Vec<f64>, bias: f64) -> Result<Self, DomainError> {
        config.validate()?;
        if weights.len() != 1usize << config.hash_bits {
            return Err(DomainError::InvalidConfig("weight vector does not match hash_bits"));
        }
        Ok(Self { config, weights, bias })
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Trains with plain SGD on the log loss, visiting the examples in a
    /// fresh seeded order every epoch. Returns the model and the mean
    /// training loss after each epoch.
    pub fn train(set: &[LabeledSentence], config: DomainConfig) -> Result<(Self, Vec<f64>), DomainError> {
        config.validate()?;
        let positives = set.iter().filter(|s| s.in_domain).count();
        if positives == 0 || positives == set.len() {
            return Err(DomainError::SingleClass);
        }
        let examples: Vec<(Vec<(u32, f64)>, f64)> =
            set.iter().map(|s| (features(&s.text, &config), if s.in_domain { 1.0 } else { 0.0 })).collect();
        let mut model = Self { config, weights: alloc::vec![0.0; 1usize << config.hash_bits], bias: 0.0 };
        let mut rng = rng::seeded(config.seed);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut losses = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (x, y) = &examples[i];
                let g = model.probability(x) - y;
                let step = config.learning_rate * g;
                for &(f, v) in x {
                    model.weights[f as usize] -= step * v;
                }
                model.bias -= step;
            }
            let loss: f64 = examples
                .iter()
                .map(|(x, y)| {
                    let p = model.probability(x);
                    -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
                })
                .sum();
            losses.push(loss / examples.len() as f64);
        }
        Ok((model, losses))
    }

    fn probability(&self, x: &[(u32, f64)]) -> f64 {
        let z = x.iter().fold(self.bias, |acc, &(f, v)| acc + self.weights[f as usize] * v);
        sigmoid(z)
    }

    /// Probability that the sentence is in-domain, strictly inside (0, 1).
    pub fn score(&self, sentence: &str) -> f64 {
        self.probability(&features(sentence, &self.config))
    }

    pub fn score_record(&self, record: &TsRecord) -> f64 {
        self.score(&record.src.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterReport {
    pub kept: u64,
    pub total: u64,
    pub threshold: f64,
}

/// Keeps records whose source scores strictly above `theta`, in order.
pub fn filter_in_domain<I>(records: I, model: &DomainModel, theta: f64) -> (Vec<TsRecord>, FilterReport)
where
    I: IntoIterator<Item = TsRecord>,
{
    let mut kept = Vec::new();
    let mut total = 0;
    for r in records {
        total += 1;
        if model.score_record(&r) > theta {
            kept.push(r);
        }
    }
    let report = FilterReport { kept: kept.len() as u64, total, threshold: theta };
    (kept, report)
}

/// Threshold under which `score > threshold` keeps `round(fraction * n)` of
/// the given scores (fewer if scores tie at the boundary).
pub fn threshold_for_fraction(scores: &[f64], fraction: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let keep = libm::round(fraction.clamp(0.0, 1.0) * sorted.len() as f64) as usize;
    if keep >= sorted.len() {
        0.0
    } else {
        sorted[keep]
    }
}
