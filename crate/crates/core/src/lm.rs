//! Word n-gram language models with interpolated absolute discounting.
//!
//! For a history `h` of length `k - 1` with count `c(h)` and `N1+(h)`
//! distinct continuations,
//!
//! ```text
//! p(w | h) = (max(c(h w) - D, 0) + D * N1+(h) * p(w | h')) / c(h)
//! ```
//!
//! where `h'` drops the oldest word. Unseen histories back off entirely. The
//! unigram level interpolates with a uniform distribution over the
//! vocabulary plus one unknown-word slot, so every word, seen or not, gets
//! positive probability and each conditional distribution sums to one.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::token::{BOS, EOS};
use crate::vocab::Vocab;
use crate::FxHashMap;

pub const DEFAULT_ORDER: usize = 3;
pub const MAX_ORDER: usize = 8;
pub const DEFAULT_DISCOUNT: f64 = 0.75;

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmError {
    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,
    #[error("order must be between 1 and {MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
    #[error("discount must lie strictly between 0 and 1, got {0}")]
    InvalidDiscount(f64),
    #[error("n-gram {ngram:?} does not match model order {order}")]
    BadNGram { ngram: Vec<String>, order: usize },
    #[error("n-gram {0:?} has zero count")]
    ZeroCount(Vec<String>),
}

#[derive(Debug, Clone, Copy, Default)]
struct HistoryStats {
    total: u64,
    types: u64,
}

#[derive(Debug, Clone)]
pub struct NGramLm {
    order: usize,
    discount: f64,
    vocab: Vocab,
    /// `ngrams[k - 1]` holds counts of n-grams of length `k`.
    ngrams: Vec<FxHashMap<Box<[u32]>, u64>>,
    /// `histories[k - 1]` describes histories of length `k`.
    histories: Vec<FxHashMap<Box<[u32]>, HistoryStats>>,
    unigram: HistoryStats,
}

impl NGramLm {
    pub fn train<I, S>(sentences: I, order: usize) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        Self::train_with_discount(sentences, order, DEFAULT_DISCOUNT)
    }

    pub fn train_with_discount<I, S>(sentences: I, order: usize, discount: f64) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let mut lm = Self::empty(order, discount)?;
        let mut any = false;
        for sentence in sentences {
            lm.add_sentence(sentence.as_ref().iter().map(String::as_str));
            any = true;
        }
        if !any {
            return Err(LmError::EmptyCorpus);
        }
        lm.rebuild_histories();
        Ok(lm)
    }

    /// Reassembles a model from raw n-gram counts such as those returned by
    /// [`NGramLm::counts`].
    pub fn from_counts<I, N, W>(order: usize, discount: f64, counts: I) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = (N, u64)>,
        N: AsRef<[W]>,
        W: AsRef<str>,
    {
        let mut lm = Self::empty(order, discount)?;
        for (ngram, count) in counts {
            let words = ngram.as_ref();
            let owned = || words.iter().map(|w| String::from(w.as_ref())).collect::<Vec<_>>();
            if words.is_empty() || words.len() > order {
                return Err(LmError::BadNGram { ngram: owned(), order });
            }
            if count == 0 {
                return Err(LmError::ZeroCount(owned()));
            }
            let ids: Box<[u32]> = words.iter().map(|w| lm.vocab.intern(w.as_ref())).collect();
            *lm.ngrams[ids.len() - 1].entry(ids).or_insert(0) += count;
        }
        if lm.ngrams[0].is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        lm.rebuild_histories();
        Ok(lm)
    }

    fn empty(order: usize, discount: f64) -> Result<Self, LmError> {
        if order == 0 || order > MAX_ORDER {
            return Err(LmError::InvalidOrder(order));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(LmError::InvalidDiscount(discount));
        }
        Ok(Self {
            order,
            discount,
            vocab: Vocab::with_reserved(&[BOS, EOS]),
            ngrams: (0..order).map(|_| FxHashMap::default()).collect(),
            histories: Vec::new(),
            unigram: HistoryStats::default(),
        })
    }

    fn add_sentence<'w>(&mut self, words: impl Iterator<Item = &'w str>) {
        let mut padded: Vec<u32> = alloc::vec![BOS_ID; self.order - 1];
        padded.extend(words.map(|w| self.vocab.intern(w)));
        padded.push(EOS_ID);
        for end in self.order - 1..padded.len() {
            for k in 1..=self.order {
                let gram = &padded[end + 1 - k..=end];
                *self.ngrams[k - 1].entry(gram.into()).or_insert(0) += 1;
            }
        }
    }

    fn rebuild_histories(&mut self) {
        let mut histories: Vec<FxHashMap<Box<[u32]>, HistoryStats>> =
            (0..self.order.saturating_sub(1)).map(|_| FxHashMap::default()).collect();
        let mut unigram = HistoryStats::default();
        for (k, grams) in self.ngrams.iter().enumerate() {
            for (gram, &count) in grams {
                let stats = if k == 0 { &mut unigram } else { histories[k - 1].entry(gram[..k].into()).or_default() };
                stats.total += count;
                stats.types += 1;
            }
        }
        self.histories = histories;
        self.unigram = unigram;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Number of predictable outcomes: every known word, the end symbol and
    /// the unknown-word slot.
    pub fn outcome_count(&self) -> usize {
        // The vocabulary holds BOS, which is never predicted; the unknown
        // slot takes its place in the count.
        self.vocab.len()
    }

    /// Known predictable words, including [`EOS`].
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        (1..self.vocab.len() as u32).map(move |id| self.vocab.word(id))
    }

    fn id(&self, word: &str) -> u32 {
        self.vocab.get(word).unwrap_or(UNK_ID)
    }

    fn unigram_prob(&self, w: u32) -> f64 {
        let n = self.unigram.total as f64;
        let c = if w == UNK_ID { 0 } else { self.ngrams[0].get(&[w][..]).copied().unwrap_or(0) };
        let d = self.discount;
        ((c as f64 - d).max(0.0) + d * self.unigram.types as f64 / self.outcome_count() as f64) / n
    }

    /// `history` is oldest-first and at most `order - 1` long.
    fn prob_ids(&self, history: &[u32], w: u32) -> f64 {
        if history.is_empty() {
            return self.unigram_prob(w);
        }
        let lower = self.prob_ids(&history[1..], w);
        let Some(stats) = self.histories[history.len() - 1].get(history) else {
            return lower;
        };
        let mut key = [0u32; MAX_ORDER];
        key[..history.len()].copy_from_slice(history);
        key[history.len()] = w;
        let c = self.ngrams[history.len()].get(&key[..=history.len()]).copied().unwrap_or(0);
        let d = self.discount;
        ((c as f64 - d).max(0.0) + d * stats.types as f64 * lower) / stats.total as f64
    }

    /// `p(word | history)`, with `history` oldest-first. Histories shorter
    /// than `order - 1` are padded with [`BOS`].
    pub fn prob<H: AsRef<str>>(&self, history: &[H], word: &str) -> f64 {
        let ids = self.history_ids(history.iter().map(|h| self.id(h.as_ref())));
        self.prob_ids(&ids, self.id(word))
    }

    fn history_ids(&self, ids: impl DoubleEndedIterator<Item = u32>) -> Vec<u32> {
        let n = self.order - 1;
        let mut recent: Vec<u32> = ids.rev().take(n).collect();
        recent.resize(n, BOS_ID);
        recent.reverse();
        recent
    }

    /// Probability of each token given the tokens before it.
    pub fn token_probs<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let ids: Vec<u32> = tokens.iter().map(|t| self.id(t.as_ref())).collect();
        (0..ids.len()).map(|j| self.prob_ids(&self.history_ids(ids[..j].iter().copied()), ids[j])).collect()
    }

    /// Natural-log probability of the sentence including the end symbol.
    pub fn sentence_log_prob<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut ids: Vec<u32> = tokens.iter().map(|t| self.id(t.as_ref())).collect();
        ids.push(EOS_ID);
        (0..ids.len()).map(|j| libm::log(self.prob_ids(&self.history_ids(ids[..j].iter().copied()), ids[j]))).sum()
    }

    /// Per-token perplexity, counting one end symbol per sentence.
    pub fn perplexity<I, S>(&self, sentences: I) -> f64
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let (mut log_prob, mut tokens) = (0.0, 0usize);
        for s in sentences {
            let s = s.as_ref();
            log_prob += self.sentence_log_prob(s);
            tokens += s.len() + 1;
        }
        libm::exp(-log_prob / tokens as f64)
    }

    /// Every stored n-gram with its count, sorted by length and then words.
    pub fn counts(&self) -> Vec<(Vec<&str>, u64)> {
        let mut out: Vec<(Vec<&str>, u64)> = self
            .ngrams
            .iter()
            .flat_map(|grams| grams.iter())
            .map(|(gram, &c)| (gram.iter().map(|&id| self.vocab.word(id)).collect(), c))
            .collect();
        out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

/// A forward model and a model trained on reversed sentences, used to score
/// how well each word is predicted from its left and right context.
#[derive(Debug, Clone)]
pub struct BidirectionalLm {
    pub forward: NGramLm,
    pub backward: NGramLm,
}

impl BidirectionalLm {
    pub fn train<I, S>(sentences: I, order: usize, discount: f64) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        let sentences: Vec<S> = sentences.into_iter().collect();
        let forward = NGramLm::train_with_discount(sentences.iter().map(|s| s.as_ref()), order, discount)?;
        let reversed = sentences.iter().map(|s| s.as_ref().iter().rev().cloned().collect::<Vec<String>>());
        let backward = NGramLm::train_with_discount(reversed, order, discount)?;
        Ok(Self { forward, backward })
    }

    /// Left-context and right-context probability of every token.
    pub fn token_probs<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<f64>, Vec<f64>) {
        let forward = self.forward.token_probs(tokens);
        let reversed: Vec<&str> = tokens.iter().rev().map(AsRef::as_ref).collect();
        let mut backward = self.backward.token_probs(&reversed);
        backward.reverse();
        (forward, backward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn sent(s: &str) -> Vec<String> {
        s.split(' ').map(ToString::to_string).collect()
    }

    fn toy() -> Vec<Vec<String>> {
        ["the cat sat", "the dog sat", "a cat ran", "the cat ran fast"].iter().map(|s| sent(s)).collect()
    }

    fn assert_normalized(lm: &NGramLm, history: &[&str]) {
        let known: f64 = lm.words().map(|w| lm.prob(history, w)).sum();
        let total = known + lm.prob(history, "never-seen-word");
        assert!((total - 1.0).abs() < 1e-9, "history {history:?}: {total}");
    }

    #[test]
    fn conditionals_sum_to_one() {
        for order in 1..=4 {
            let lm = NGramLm::train(toy(), order).unwrap();
            for h in [&[][..], &["the"], &["the", "cat"], &["zebra", "cat"], &["a", "cat", "ran"]] {
                assert_normalized(&lm, h);
            }
        }
    }

    #[test]
    fn degenerate_corpus() {
        let lm = NGramLm::train(vec![sent("a a a"); 50], 2).unwrap();
        let p = lm.prob(&["a"], "a");
        assert!(p > 0.6 && p < 1.0, "{p}");
        assert!(lm.prob(&["a"], "b") > 0.0);
        assert!(lm.prob(&["b"], "b") > 0.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(NGramLm::train(Vec::<Vec<String>>::new(), 3), Err(LmError::EmptyCorpus)));
        assert!(matches!(NGramLm::train(toy(), 0), Err(LmError::InvalidOrder(0))));
        assert!(matches!(NGramLm::train_with_discount(toy(), 2, 1.0), Err(LmError::InvalidDiscount(_))));
    }

    #[test]
    fn count_dump_round_trips() {
        let lm = NGramLm::train(toy(), 3).unwrap();
        let counts = lm.counts();
        let back = NGramLm::from_counts(3, lm.discount(), counts.iter().map(|(g, c)| (g.clone(), *c))).unwrap();
        for s in toy() {
            assert_eq!(lm.token_probs(&s), back.token_probs(&s));
        }
        assert_eq!(back.counts(), counts);
    }

    #[test]
    fn backward_model_sees_right_context() {
        let lm = BidirectionalLm::train(toy(), 2, DEFAULT_DISCOUNT).unwrap();
        let (fwd, bwd) = lm.token_probs(&["the", "cat", "sat"]);
        assert_eq!(fwd.len(), 3);
        assert_eq!(bwd.len(), 3);
        assert_eq!(bwd[2], lm.backward.prob::<&str>(&[], "sat"));
        assert_eq!(bwd[1], lm.backward.prob(&["sat"], "cat"));
        assert_eq!(bwd[0], lm.backward.prob(&["cat"], "the"));
    }
}
