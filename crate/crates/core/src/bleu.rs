//! Corpus BLEU over pre-tokenized segments, and record-set statistics.
//!
//! BLEU pools clipped n-gram matches (n = 1..4) over all segments, takes the
//! geometric mean of the pooled precisions and applies the brevity penalty
//! `exp(1 - r/c)` when the hypotheses are shorter than the references. No
//! re-tokenization happens here, so scores are only comparable between
//! runs that tokenized the same way.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::record::{Origin, TsRecord};
use crate::FxHashMap;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BleuError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("no segments to score")]
    Empty,
}

/// Sufficient statistics for corpus BLEU; `merge` is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn segment<H: AsRef<str>, R: AsRef<str>>(hyp: &[H], reference: &[R]) -> Self {
        let hyp: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
        let reference: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
        let mut stats = Self { hyp_len: hyp.len() as u64, ref_len: reference.len() as u64, ..Self::default() };
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(&reference, n);
            for (gram, count) in ngram_counts(&hyp, n) {
                stats.matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
            stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        }
        stats
    }

    pub fn merge(&mut self, other: &Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn precision(&self, n: usize) -> f64 {
        match self.totals[n - 1] {
            0 => 0.0,
            t => self.matches[n - 1] as f64 / t as f64,
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            libm::exp(1.0 - self.ref_len as f64 / self.hyp_len as f64)
        }
    }

    /// BLEU in `[0, 100]`. Without smoothing any empty or zero precision
    /// gives 0. With smoothing, orders 2..4 use `(m + 1) / (t + 1)`.
    pub fn score(&self, smooth: bool) -> f64 {
        let mut log_sum = 0.0;
        for n in 1..=MAX_ORDER {
            let (m, t) = (self.matches[n - 1] as f64, self.totals[n - 1] as f64);
            let p = if smooth && n > 1 {
                (m + 1.0) / (t + 1.0)
            } else if t > 0.0 {
                m / t
            } else {
                0.0
            };
            if p <= 0.0 {
                return 0.0;
            }
            log_sum += libm::log(p);
        }
        let bleu = 100.0 * self.brevity_penalty() * libm::exp(log_sum / MAX_ORDER as f64);
        bleu.clamp(0.0, 100.0)
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> FxHashMap<&'a [&'a str], u64> {
    let mut counts = FxHashMap::default();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Pooled statistics of a whole corpus, one reference per hypothesis.
pub fn corpus_stats<H, R>(hyps: &[Vec<H>], refs: &[Vec<R>]) -> Result<BleuStats, BleuError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if hyps.len() != refs.len() {
        return Err(BleuError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(BleuError::Empty);
    }
    let mut stats = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        stats.merge(&BleuStats::segment(h, r));
    }
    Ok(stats)
}

/// Corpus BLEU of `hyps` against one reference each.
pub fn corpus_bleu<H, R>(hyps: &[Vec<H>], refs: &[Vec<R>], smooth: bool) -> Result<f64, BleuError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    corpus_stats(hyps, refs).map(|s| s.score(smooth))
}

/// Counts over a record set: records per origin, span and suggestion
/// length histograms, and source length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub records: u64,
    pub per_origin: BTreeMap<Origin, u64>,
    pub span_lengths: BTreeMap<usize, u64>,
    pub suggestion_lengths: BTreeMap<usize, u64>,
    pub source_tokens: u64,
}

impl DatasetStats {
    pub fn from_records<'r, I: IntoIterator<Item = &'r TsRecord>>(records: I) -> Self {
        let mut stats = Self::default();
        for r in records {
            stats.add(r);
        }
        stats
    }

    pub fn add(&mut self, r: &TsRecord) {
        self.records += 1;
        *self.per_origin.entry(r.origin).or_insert(0) += 1;
        *self.span_lengths.entry(r.span.len()).or_insert(0) += 1;
        *self.suggestion_lengths.entry(r.suggestion.len()).or_insert(0) += 1;
        self.source_tokens += r.src.len() as u64;
    }

    pub fn merge(&mut self, other: &Self) {
        self.records += other.records;
        for (k, v) in &other.per_origin {
            *self.per_origin.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.span_lengths {
            *self.span_lengths.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.suggestion_lengths {
            *self.suggestion_lengths.entry(*k).or_insert(0) += v;
        }
        self.source_tokens += other.source_tokens;
    }

    pub fn count(&self, origin: Origin) -> u64 {
        self.per_origin.get(&origin).copied().unwrap_or(0)
    }

    pub fn mean_source_len(&self) -> f64 {
        if self.records == 0 {
            0.0
        } else {
            self.source_tokens as f64 / self.records as f64
        }
    }
}
