//! Seeded synthetic corpora for tests and the bundled toy corpus.
//!
//! Sentences come from a first-order Markov chain whose start words and
//! successor choices are Zipf-distributed, so n-gram models have real
//! structure to learn. A "translation" maps each source word to a fixed
//! target word and occasionally swaps neighbours.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod oracle;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights `1 / (k + 1)^s` for `k = 0..n`.
pub fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|k| 1.0 / ((k + 1) as f64).powf(s)).collect()
}

/// Markov-chain sentence generator over `words`.
#[derive(Debug, Clone)]
pub struct MarkovLanguage {
    pub words: Vec<String>,
    start: WeightedIndex<f64>,
    successors: Vec<Vec<usize>>,
    successor_weights: WeightedIndex<f64>,
}

impl MarkovLanguage {
    /// `branching` successors per word, chosen at random from the vocabulary.
    pub fn new(words: Vec<String>, branching: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let n = words.len();
        let successors = (0..n).map(|_| (0..branching).map(|_| r.gen_range(0..n)).collect()).collect();
        Self {
            start: WeightedIndex::new(zipf_weights(n, 1.0)).unwrap(),
            successor_weights: WeightedIndex::new(zipf_weights(branching, 1.0)).unwrap(),
            words,
            successors,
        }
    }

    /// Vocabulary `{prefix}{k}` for `k = 0..n`.
    pub fn numbered(prefix: &str, n: usize, branching: usize, seed: u64) -> Self {
        Self::new((0..n).map(|k| format!("{prefix}{k}")).collect(), branching, seed)
    }

    pub fn sentence_ids<R: Rng>(&self, len: usize, r: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut cur = self.start.sample(r);
        out.push(cur);
        while out.len() < len {
            cur = self.successors[cur][self.successor_weights.sample(r)];
            out.push(cur);
        }
        out
    }

    pub fn sentence<R: Rng>(&self, len: usize, r: &mut R) -> Vec<String> {
        self.sentence_ids(len, r).into_iter().map(|i| self.words[i].clone()).collect()
    }

    pub fn random_word<R: Rng>(&self, r: &mut R) -> &str {
        &self.words[r.gen_range(0..self.words.len())]
    }
}

/// Source language plus a word-for-word target mapping.
#[derive(Debug, Clone)]
pub struct ParallelLanguage {
    pub source: MarkovLanguage,
    pub target_words: Vec<String>,
    /// Probability of swapping each adjacent target pair.
    pub swap_prob: f64,
}

impl ParallelLanguage {
    pub fn new(vocab: usize, seed: u64) -> Self {
        Self::with_prefixes("s", "t", vocab, seed)
    }

    /// Source words `{src}{k}`, target words `{tgt}{k}`.
    pub fn with_prefixes(src: &str, tgt: &str, vocab: usize, seed: u64) -> Self {
        let source = MarkovLanguage::numbered(src, vocab, 4, seed);
        let mut perm: Vec<usize> = (0..vocab).collect();
        perm.shuffle(&mut rng(seed ^ 0x5eed));
        let target_words = perm.into_iter().map(|k| format!("{tgt}{k}")).collect();
        Self { source, target_words, swap_prob: 0.1 }
    }

    /// A source sentence and its reference translation.
    pub fn pair<R: Rng>(&self, len: usize, r: &mut R) -> (Vec<String>, Vec<String>) {
        let ids = self.source.sentence_ids(len, r);
        let src = ids.iter().map(|&i| self.source.words[i].clone()).collect();
        let mut tgt: Vec<String> = ids.iter().map(|&i| self.target_words[i].clone()).collect();
        let mut j = 0;
        while j + 1 < tgt.len() {
            if r.gen_bool(self.swap_prob) {
                tgt.swap(j, j + 1);
                j += 2;
            } else {
                j += 1;
            }
        }
        (src, tgt)
    }

    pub fn random_target_word<R: Rng>(&self, r: &mut R) -> &str {
        &self.target_words[r.gen_range(0..self.target_words.len())]
    }
}

/// Replaces `k` distinct positions with a different random word from
/// `vocab`. Returns the corrupted sentence and the sorted positions.
pub fn corrupt<R: Rng>(tokens: &[String], k: usize, vocab: &[String], r: &mut R) -> (Vec<String>, Vec<usize>) {
    let mut out = tokens.to_vec();
    let mut positions = rand::seq::index::sample(r, tokens.len(), k.min(tokens.len())).into_vec();
    positions.sort_unstable();
    for &p in &positions {
        loop {
            let w = &vocab[r.gen_range(0..vocab.len())];
            if *w != tokens[p] {
                out[p] = w.clone();
                break;
            }
        }
    }
    (out, positions)
}

/// Sentences whose tokens are all distinct, drawn from `{prefix}{k}`.
pub fn distinct_sentence<R: Rng>(prefix: &str, vocab: usize, len: usize, r: &mut R) -> Vec<String> {
    rand::seq::index::sample(r, vocab, len).into_iter().map(|k| format!("{prefix}{k}")).collect()
}

/// Word built from `letters`, Zipf-ish in length.
fn spelled_word<R: Rng>(letters: &[u8], r: &mut R) -> String {
    let len = r.gen_range(3..8);
    (0..len).map(|_| letters[r.gen_range(0..letters.len())] as char).collect()
}

/// Two text domains with disjoint alphabets, for discriminator tests.
#[derive(Debug, Clone)]
pub struct TwoDomains {
    pub inside: MarkovLanguage,
    pub outside: MarkovLanguage,
}

impl TwoDomains {
    pub fn new(vocab: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let a: Vec<String> = (0..vocab).map(|_| spelled_word(b"abcdefghijklm", &mut r)).collect();
        let b: Vec<String> = (0..vocab).map(|_| spelled_word(b"nopqrstuvwxyz", &mut r)).collect();
        Self { inside: MarkovLanguage::new(a, 4, seed + 1), outside: MarkovLanguage::new(b, 4, seed + 2) }
    }

    pub fn sentence<R: Rng>(&self, in_domain: bool, r: &mut R) -> String {
        let len = r.gen_range(5..15);
        let lang = if in_domain { &self.inside } else { &self.outside };
        lang.sentence(len, r).join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        let lang = ParallelLanguage::new(50, 1);
        assert_eq!(lang.pair(8, &mut rng(2)), lang.pair(8, &mut rng(2)));
        let (src, tgt) = lang.pair(8, &mut rng(3));
        assert_eq!(src.len(), tgt.len());
        let (bad, pos) = corrupt(&tgt, 2, &lang.target_words, &mut rng(4));
        assert_eq!(pos.len(), 2);
        for (i, (a, b)) in tgt.iter().zip(&bad).enumerate() {
            assert_eq!(a != b, pos.contains(&i));
        }
    }
}
