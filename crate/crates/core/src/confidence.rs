//! Word-level translation confidence and low-confidence span selection.
//!
//! A word is confident when it would be easy to recover after masking it.
//! The statistical scorer approximates that recovery probability with two
//! signals: fluency, the geometric mean of the left-context and
//! right-context n-gram probabilities, and adequacy, the best lexical
//! translation probability from any source word (or NULL). The fused score
//! is `fluency^alpha * adequacy^(1 - alpha)`.
//!
//! Scores from an external QE model can replace the statistical ones; see
//! [`parse_score_line`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::align::LexiconTable;
use crate::lm::BidirectionalLm;
use crate::record::Span;
use crate::span::LengthDistribution;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("line {line}: expected {expected} scores, found {found}")]
    LengthMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: score {value:?} is not a number")]
    NotANumber { line: usize, value: String },
    #[error("line {line}: score {value} outside [0, 1]")]
    OutOfRange { line: usize, value: f64 },
    #[error("confidence vector is empty")]
    Empty,
}

/// One confidence value in `[0, 1]` per MT token; higher is more confident.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceVector(Vec<f64>);

impl ConfidenceVector {
    pub fn new(scores: Vec<f64>) -> Result<Self, ScoreError> {
        if scores.is_empty() {
            return Err(ScoreError::Empty);
        }
        if let Some(&value) = scores.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ScoreError::OutOfRange { line: 0, value });
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-separated decimals, the format read by [`parse_score_line`].
    pub fn to_line(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        parts.join(" ")
    }
}

/// Parses one line of an external score file. `line` is the 1-based line
/// number used in error messages.
pub fn parse_score_line(text: &str, expected_len: usize, line: usize) -> Result<ConfidenceVector, ScoreError> {
    let mut scores = Vec::with_capacity(expected_len);
    for item in text.split_whitespace() {
        let value: f64 = item.parse().map_err(|_| ScoreError::NotANumber { line, value: item.to_string() })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(ScoreError::OutOfRange { line, value });
        }
        scores.push(value);
    }
    if scores.len() != expected_len {
        return Err(ScoreError::LengthMismatch { line, expected: expected_len, found: scores.len() });
    }
    ConfidenceVector::new(scores).map_err(|e| match e {
        ScoreError::Empty => ScoreError::LengthMismatch { line, expected: expected_len, found: 0 },
        other => other,
    })
}

/// `max(p(t | NULL), max_s p(t | s))`. Depends only on the source and the
/// word itself.
pub fn adequacy<S: AsRef<str>>(src: &[S], word: &str, lexicon: &LexiconTable) -> f64 {
    src.iter().map(|s| lexicon.prob(s.as_ref(), word)).fold(lexicon.null_prob(word), f64::max)
}

/// Scores every MT token. Panics if `mt` is empty.
pub fn score_words<S: AsRef<str>, T: AsRef<str>>(
    src: &[S],
    mt: &[T],
    lm: &BidirectionalLm,
    lexicon: &LexiconTable,
    alpha: f64,
) -> ConfidenceVector {
    assert!(!mt.is_empty(), "cannot score an empty translation");
    let (forward, backward) = lm.token_probs(mt);
    let scores = mt
        .iter()
        .enumerate()
        .map(|(j, word)| {
            let fluency = libm::sqrt(forward[j] * backward[j]);
            let adequacy = adequacy(src, word.as_ref(), lexicon);
            let score = libm::pow(fluency, alpha) * libm::pow(adequacy, 1.0 - alpha);
            score.clamp(0.0, 1.0)
        })
        .collect();
    ConfidenceVector(scores)
}

/// Outcome of [`select_low_confidence_span`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpanSelection {
    Selected(Span),
    /// Even the least confident window has mean above the threshold.
    Confident,
    /// No supported span length fits the sentence.
    Unsampleable,
}

/// The length-`len` window with the smallest mean, leftmost on ties, and
/// that mean. Window sums are computed directly so equal windows compare
/// exactly.
pub fn lowest_mean_window(scores: &[f64], len: usize) -> Option<(Span, f64)> {
    if len == 0 || len > scores.len() {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for start in 0..=scores.len() - len {
        let sum: f64 = scores[start..start + len].iter().sum();
        if best.is_none_or(|(_, b)| sum < b) {
            best = Some((start, sum));
        }
    }
    best.map(|(start, sum)| (Span::new(start, start + len - 1), sum / len as f64))
}

/// Draws a window length from `dist` (renormalized to fit the sentence) and
/// returns the least confident window of that length, unless its mean
/// confidence exceeds `tau`.
pub fn select_low_confidence_span<R: Rng + ?Sized>(
    conf: &ConfidenceVector,
    dist: &LengthDistribution,
    tau: f64,
    rng: &mut R,
) -> SpanSelection {
    let Ok(len) = dist.sample_length(conf.len(), rng) else {
        return SpanSelection::Unsampleable;
    };
    match lowest_mean_window(conf.scores(), len) {
        Some((span, mean)) if mean <= tau => SpanSelection::Selected(span),
        Some(_) => SpanSelection::Confident,
        None => SpanSelection::Unsampleable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn forced(len: usize) -> LengthDistribution {
        LengthDistribution::from_probs([(len, 1.0)]).unwrap()
    }

    #[test]
    fn picks_the_lowest_window() {
        let conf = ConfidenceVector::new(vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let got = select_low_confidence_span(&conf, &forced(2), 0.5, &mut rng::seeded(0));
        assert_eq!(got, SpanSelection::Selected(Span::new(1, 2)));
    }

    #[test]
    fn confident_sentences_yield_nothing() {
        let conf = ConfidenceVector::new(vec![0.9, 0.9]).unwrap();
        for len in 1..=2 {
            let got = select_low_confidence_span(&conf, &forced(len), 0.5, &mut rng::seeded(0));
            assert_eq!(got, SpanSelection::Confident);
        }
        let got = select_low_confidence_span(&conf, &forced(3), 0.5, &mut rng::seeded(0));
        assert_eq!(got, SpanSelection::Unsampleable);
    }

    #[test]
    fn ties_go_to_the_leftmost_window() {
        let conf = ConfidenceVector::new(vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let got = select_low_confidence_span(&conf, &forced(2), 0.5, &mut rng::seeded(0));
        assert_eq!(got, SpanSelection::Selected(Span::new(0, 1)));
    }

    #[test]
    fn score_lines() {
        assert_eq!(parse_score_line("0.9 0.1 0.8", 3, 1).unwrap().scores(), &[0.9, 0.1, 0.8]);
        assert_eq!(
            parse_score_line("0.9 0.1", 3, 4),
            Err(ScoreError::LengthMismatch { line: 4, expected: 3, found: 2 })
        );
        assert_eq!(parse_score_line("0.9 1.5 0.1", 3, 2), Err(ScoreError::OutOfRange { line: 2, value: 1.5 }));
        assert!(matches!(parse_score_line("0.9 x 0.1", 3, 2), Err(ScoreError::NotANumber { .. })));
        let v = ConfidenceVector::new(vec![0.25, 1.0, 0.0]).unwrap();
        assert_eq!(parse_score_line(&v.to_line(), 3, 1).unwrap(), v);
    }

    #[test]
    fn adequacy_with_empty_source_is_the_null_probability() {
        let lex = LexiconTable::from_entries([("[NULL]", "x", 0.3), ("[NULL]", "y", 0.7)]).unwrap();
        assert_eq!(adequacy::<&str>(&[], "x", &lex), 0.3);
        assert_eq!(adequacy(&["zz"], "y", &lex), 0.7);
    }
}
