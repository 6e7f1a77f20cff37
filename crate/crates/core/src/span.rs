//! Span-length statistics and random span masking for golden and pseudo
//! parallel corpora.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::record::{Origin, RecordError, Span, TsRecord};
use crate::rng;
use crate::token::{ParallelPair, MASK};

/// Tolerance on the total probability mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Success probability of the geometric fallback distribution.
pub const FALLBACK_P: f64 = 0.5;
/// Longest span the fallback distribution supports.
pub const FALLBACK_MAX_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpanError {
    #[error("no span lengths to fit; use the fallback distribution instead")]
    EmptyLengths,
    #[error("span lengths must be at least 1")]
    ZeroLength,
    #[error("length {len} listed twice")]
    DuplicateLength { len: usize },
    #[error("probability for length {len} is invalid: {p}")]
    InvalidProbability { len: usize, p: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("distribution has no mass at any length <= {tgt_len}")]
    Unsampleable { tgt_len: usize },
    #[error("span ({start}, {end}) out of bounds for {len} tokens")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("span masking builds golden or pseudo records, not {0}")]
    InvalidOrigin(Origin),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Empirical distribution of span lengths (in tokens).
#[derive(Debug, Clone, PartialEq)]
pub struct LengthDistribution {
    /// `probs[k - 1]` is the probability of length `k`; the last entry is
    /// positive.
    probs: Vec<f64>,
}

impl LengthDistribution {
    /// `probs[k] = count(k) / total`.
    pub fn fit<I>(lengths: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut counts: Vec<u64> = Vec::new();
        let mut total = 0u64;
        for len in lengths {
            if len == 0 {
                return Err(SpanError::ZeroLength);
            }
            if counts.len() < len {
                counts.resize(len, 0);
            }
            counts[len - 1] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(SpanError::EmptyLengths);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { probs })
    }

    pub fn from_probs<I>(entries: I) -> Result<Self, SpanError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut probs: Vec<f64> = Vec::new();
        let mut seen: Vec<bool> = Vec::new();
        for (len, p) in entries {
            if len == 0 {
                return Err(SpanError::ZeroLength);
            }
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(SpanError::InvalidProbability { len, p });
            }
            if probs.len() < len {
                probs.resize(len, 0.0);
                seen.resize(len, false);
            }
            if seen[len - 1] {
                return Err(SpanError::DuplicateLength { len });
            }
            seen[len - 1] = true;
            probs[len - 1] = p;
        }
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(SpanError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Geometric distribution with success probability 0.5, truncated at
    /// length 10 and renormalized. Used when no golden data is available.
    pub fn fallback() -> Self {
        let raw: Vec<f64> =
            (1..=FALLBACK_MAX_LEN).map(|k| FALLBACK_P * libm::pow(1.0 - FALLBACK_P, (k - 1) as f64)).collect();
        let total: f64 = raw.iter().sum();
        Self { probs: raw.into_iter().map(|p| p / total).collect() }
    }

    pub fn max_len(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, len: usize) -> f64 {
        match len {
            0 => 0.0,
            k => self.probs.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    /// `(length, probability)` for every length with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, &p)| (i + 1, p))
    }

    /// Probability mass at lengths `<= limit`.
    pub fn mass_up_to(&self, limit: usize) -> f64 {
        self.probs.iter().take(limit).sum()
    }

    /// Draws a length from the distribution conditioned on `L <= limit`. The
    /// condition is applied by renormalizing the truncated table, so short
    /// sentences never loop.
    pub fn sample_length<R: Rng + ?Sized>(&self, limit: usize, rng: &mut R) -> Result<usize, SpanError> {
        let mass = self.mass_up_to(limit);
        if mass <= 0.0 {
            return Err(SpanError::Unsampleable { tgt_len: limit });
        }
        let u = rng.gen::<f64>() * mass;
        let mut cumulative = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().take(limit).enumerate() {
            if p <= 0.0 {
                continue;
            }
            cumulative += p;
            last = i + 1;
            if u < cumulative {
                return Ok(last);
            }
        }
        // Rounding can leave u a hair above the accumulated mass.
        Ok(last)
    }
}

/// Draws a span for a sentence of `tgt_len` tokens: the length first
/// (conditioned on fitting), then a uniform start position.
pub fn sample_span<R: Rng + ?Sized>(tgt_len: usize, dist: &LengthDistribution, rng: &mut R) -> Result<Span, SpanError> {
    let len = dist.sample_length(tgt_len, rng)?;
    let start = rng.gen_range(0..=tgt_len - len);
    Ok(Span::new(start, start + len - 1))
}

/// Replaces `tokens[start..=end]` with a single [`MASK`] and returns the
/// masked sentence together with the removed tokens.
pub fn mask_span(tokens: &[String], start: usize, end: usize) -> Result<(Vec<String>, Vec<String>), SpanError> {
    if start > end || end >= tokens.len() {
        return Err(SpanError::OutOfBounds { start, end, len: tokens.len() });
    }
    let mut masked = Vec::with_capacity(tokens.len() - (end - start));
    masked.extend_from_slice(&tokens[..start]);
    masked.push(MASK.to_string());
    masked.extend_from_slice(&tokens[end + 1..]);
    Ok((masked, tokens[start..=end].to_vec()))
}

/// Inverse of [`mask_span`].
pub fn splice(masked: &[String], suggestion: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(masked.len() + suggestion.len());
    for tok in masked {
        if tok == MASK {
            out.extend_from_slice(suggestion);
        } else {
            out.push(tok.clone());
        }
    }
    out
}

/// Builds golden or pseudo records by masking one sampled span per target
/// sentence.
#[derive(Debug, Clone)]
pub struct SpanMasker<'a> {
    dist: &'a LengthDistribution,
    origin: Origin,
    seed: u64,
}

impl<'a> SpanMasker<'a> {
    pub fn new(dist: &'a LengthDistribution, origin: Origin, seed: u64) -> Result<Self, SpanError> {
        if !origin.requires_reconstruction() {
            return Err(SpanError::InvalidOrigin(origin));
        }
        Ok(Self { dist, origin, seed })
    }

    /// The draw depends only on the run seed and `pair.id`.
    pub fn mask_pair(&self, pair: &ParallelPair) -> Result<TsRecord, SpanError> {
        let mut rng = rng::for_item(self.seed, pair.id);
        let span = sample_span(pair.tgt.len(), self.dist, &mut rng)?;
        let (masked, suggestion) = mask_span(&pair.tgt, span.start, span.end)?;
        Ok(TsRecord::new(pair.src.clone(), masked, suggestion, span, self.origin)?)
    }

    pub fn build<I, E>(&self, pairs: I) -> MaskedCorpus<'_, 'a, I::IntoIter>
    where
        I: IntoIterator<Item = Result<ParallelPair, E>>,
        E: From<SpanError>,
    {
        MaskedCorpus { masker: self, pairs: pairs.into_iter(), skipped: 0 }
    }
}

/// Streaming record builder returned by [`SpanMasker::build`]. Pairs whose
/// target is too short for every supported length are skipped and counted.
pub struct MaskedCorpus<'m, 'a, I> {
    masker: &'m SpanMasker<'a>,
    pairs: I,
    skipped: u64,
}

impl<I> MaskedCorpus<'_, '_, I> {
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl<I, E> Iterator for MaskedCorpus<'_, '_, I>
where
    I: Iterator<Item = Result<ParallelPair, E>>,
    E: From<SpanError>,
{
    type Item = Result<TsRecord, E>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let pair = match self.pairs.next()? {
                Ok(pair) => pair,
                Err(e) => return Some(Err(e)),
            };
            match self.masker.mask_pair(&pair) {
                Ok(record) => return Some(Ok(record)),
                Err(SpanError::Unsampleable { .. }) => self.skipped += 1,
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Histogram of span lengths over a record set, indexed by `length - 1`.
pub fn span_length_counts<'r, I>(records: I) -> Vec<u64>
where
    I: IntoIterator<Item = &'r TsRecord>,
{
    let mut counts = vec![];
    for r in records {
        let len = r.span.len();
        if counts.len() < len {
            counts.resize(len, 0);
        }
        counts[len - 1] += 1;
    }
    counts
}
