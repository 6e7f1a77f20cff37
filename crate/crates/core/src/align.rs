//! Word alignment between MT output and references.
//!
//! A lexical translation table `p(ref word | mt word)` is trained with IBM
//! Model 1 expectation maximization; each MT token is then linked to the
//! reference position its row scores highest. Alignments produced by other
//! tools can be read from Pharaoh text (`i-j` pairs) instead.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::rng;
use crate::token::{ParallelPair, NULL};
use crate::vocab::Vocab;
use crate::FxHashMap;

pub const MIN_ALIGN_LEN: usize = 5;
pub const MAX_ALIGN_LEN: usize = 100;
pub const DEFAULT_ITERATIONS: usize = 5;
/// Entries below this probability are dropped after training.
pub const DEFAULT_PRUNE: f64 = 1e-6;
/// Tolerance on lexicon row sums.
pub const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("cannot train a lexicon on an empty corpus")]
    EmptyCorpus,
    #[error("at least one EM iteration is required")]
    ZeroIterations,
    #[error("EM log-likelihood decreased at iteration {iteration}: {before} -> {after}")]
    LikelihoodDecreased { iteration: usize, before: f64, after: f64 },
    #[error("lexicon row for {word:?} sums to {sum}")]
    RowNotNormalized { word: String, sum: f64 },
    #[error("invalid probability {p} for ({word:?}, {target:?})")]
    InvalidProbability { word: String, target: String, p: f64 },
    #[error("malformed alignment link {0:?}, expected i-j")]
    MalformedLink(String),
    #[error("alignment link {i}-{j} out of bounds for lengths {mt_len} and {ref_len}")]
    LinkOutOfBounds { i: usize, j: usize, mt_len: usize, ref_len: usize },
}

/// Length filter plus optional seeded subsampling applied before training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentFilter {
    pub min_len: usize,
    pub max_len: usize,
    /// Keep at most this many pairs, chosen uniformly.
    pub cap: Option<usize>,
    pub seed: u64,
}

impl Default for AlignmentFilter {
    fn default() -> Self {
        Self { min_len: MIN_ALIGN_LEN, max_len: MAX_ALIGN_LEN, cap: None, seed: 0 }
    }
}

impl AlignmentFilter {
    /// Both sides must have a length in `[min_len, max_len]`.
    pub fn keeps(&self, pair: &ParallelPair) -> bool {
        let ok = |n: usize| self.min_len <= n && n <= self.max_len;
        ok(pair.src.len()) && ok(pair.tgt.len())
    }

    /// Applies the length filter and, with a cap, reservoir-samples the
    /// survivors. The result keeps input order.
    pub fn apply<I, E>(&self, pairs: I) -> Result<Vec<ParallelPair>, E>
    where
        I: IntoIterator<Item = Result<ParallelPair, E>>,
    {
        let mut rng = rng::seeded(self.seed);
        let mut kept = Vec::new();
        let mut seen = 0usize;
        for pair in pairs {
            let pair = pair?;
            if !self.keeps(&pair) {
                continue;
            }
            match self.cap {
                Some(cap) if kept.len() >= cap => {
                    let slot = rng.gen_range(0..=seen);
                    if slot < cap {
                        kept[slot] = pair;
                    }
                }
                _ => kept.push(pair),
            }
            seen += 1;
        }
        kept.sort_by_key(|p: &ParallelPair| p.id);
        Ok(kept)
    }
}

fn key(s: u32, t: u32) -> u64 {
    (u64::from(s) << 32) | u64::from(t)
}

fn key_source(k: u64) -> u32 {
    (k >> 32) as u32
}

fn key_target(k: u64) -> u32 {
    k as u32
}

/// Word-translation probabilities `p(t | s)`, including the NULL source.
#[derive(Debug, Clone)]
pub struct LexiconTable {
    src: Vocab,
    tgt: Vocab,
    probs: FxHashMap<u64, f64>,
}

impl LexiconTable {
    /// Builds a table from `(source, target, p)` triples; every row must sum
    /// to one.
    pub fn from_entries<I, S, T>(entries: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = (S, T, f64)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut table = Self { src: Vocab::with_reserved(&[NULL]), tgt: Vocab::default(), probs: FxHashMap::default() };
        for (s, t, p) in entries {
            let (s, t) = (s.as_ref(), t.as_ref());
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(AlignError::InvalidProbability { word: s.to_string(), target: t.to_string(), p });
            }
            let k = key(table.src.intern(s), table.tgt.intern(t));
            *table.probs.entry(k).or_insert(0.0) += p;
        }
        table.check_rows()?;
        Ok(table)
    }

    fn row_sums(&self) -> Vec<f64> {
        let mut sums = alloc::vec![0.0; self.src.len()];
        for (&k, &p) in &self.probs {
            sums[key_source(k) as usize] += p;
        }
        sums
    }

    fn check_rows(&self) -> Result<(), AlignError> {
        for (s, sum) in self.row_sums().into_iter().enumerate() {
            if sum != 0.0 && (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(AlignError::RowNotNormalized { word: self.src.word(s as u32).to_string(), sum });
            }
        }
        Ok(())
    }

    pub fn prob(&self, s: &str, t: &str) -> f64 {
        match (self.src.get(s), self.tgt.get(t)) {
            (Some(s), Some(t)) => self.prob_ids(s, t),
            _ => 0.0,
        }
    }

    pub fn null_prob(&self, t: &str) -> f64 {
        self.tgt.get(t).map_or(0.0, |t| self.prob_ids(0, t))
    }

    pub fn has_source(&self, s: &str) -> bool {
        self.src.get(s).is_some_and(|id| id != 0)
    }

    pub(crate) fn source_id(&self, s: &str) -> Option<u32> {
        self.src.get(s)
    }

    pub(crate) fn target_id(&self, t: &str) -> Option<u32> {
        self.tgt.get(t)
    }

    pub(crate) fn prob_ids(&self, s: u32, t: u32) -> f64 {
        self.probs.get(&key(s, t)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// All entries sorted by source word, then descending probability, then
    /// target word.
    pub fn entries(&self) -> Vec<(&str, &str, f64)> {
        let mut out: Vec<_> =
            self.probs.iter().map(|(&k, &p)| (self.src.word(key_source(k)), self.tgt.word(key_target(k)), p)).collect();
        out.sort_by(|a, b| a.0.cmp(b.0).then(b.2.total_cmp(&a.2)).then(a.1.cmp(b.1)));
        out
    }

    /// Row `s` as `(target, p)` pairs, sorted like [`LexiconTable::entries`].
    pub fn row(&self, s: &str) -> Vec<(&str, f64)> {
        let Some(sid) = self.src.get(s) else { return Vec::new() };
        let mut out: Vec<_> = self
            .probs
            .iter()
            .filter(|(&k, _)| key_source(k) == sid)
            .map(|(&k, &p)| (self.tgt.word(key_target(k)), p))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }
}

/// IBM Model 1 trainer, one EM iteration per [`Ibm1Trainer::step`].
///
/// The pair's `src` side is the conditioning side (here the MT output) and
/// `tgt` the generated side (the reference). A NULL word is prepended to
/// every conditioning sentence.
pub struct Ibm1Trainer {
    src: Vocab,
    tgt: Vocab,
    corpus: Vec<(Vec<u32>, Vec<u32>)>,
    probs: FxHashMap<u64, f64>,
    counts: FxHashMap<u64, f64>,
    totals: Vec<f64>,
    history: Vec<f64>,
}

impl Ibm1Trainer {
    /// Interns the corpus and initializes each row uniformly over the target
    /// words that co-occur with its source word.
    pub fn new<'p, I>(pairs: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = &'p ParallelPair>,
    {
        let mut src = Vocab::with_reserved(&[NULL]);
        let mut tgt = Vocab::default();
        let mut corpus = Vec::new();
        let mut probs: FxHashMap<u64, f64> = FxHashMap::default();
        for pair in pairs {
            let mut s_ids = Vec::with_capacity(pair.src.len() + 1);
            s_ids.push(0);
            s_ids.extend(pair.src.iter().map(|w| src.intern(w)));
            let t_ids: Vec<u32> = pair.tgt.iter().map(|w| tgt.intern(w)).collect();
            for &s in &s_ids {
                for &t in &t_ids {
                    probs.insert(key(s, t), 0.0);
                }
            }
            corpus.push((s_ids, t_ids));
        }
        if corpus.is_empty() {
            return Err(AlignError::EmptyCorpus);
        }
        let mut fanout = alloc::vec![0u32; src.len()];
        for &k in probs.keys() {
            fanout[key_source(k) as usize] += 1;
        }
        for (k, p) in probs.iter_mut() {
            *p = 1.0 / f64::from(fanout[key_source(*k) as usize]);
        }
        let counts = probs.keys().map(|&k| (k, 0.0)).collect();
        let totals = alloc::vec![0.0; src.len()];
        Ok(Self { src, tgt, corpus, probs, counts, totals, history: Vec::new() })
    }

    /// Runs one E-step and M-step. Returns the corpus log-likelihood under
    /// the parameters in effect before the update, and fails if it is lower
    /// than the previous iteration's.
    pub fn step(&mut self) -> Result<f64, AlignError> {
        for c in self.counts.values_mut() {
            *c = 0.0;
        }
        self.totals.iter_mut().for_each(|t| *t = 0.0);
        let mut ll = 0.0;
        for (s_ids, t_ids) in &self.corpus {
            let norm = libm::log(s_ids.len() as f64);
            for &t in t_ids {
                let denom: f64 = s_ids.iter().map(|&s| self.probs[&key(s, t)]).sum();
                ll += libm::log(denom) - norm;
                for &s in s_ids {
                    let share = self.probs[&key(s, t)] / denom;
                    *self.counts.get_mut(&key(s, t)).unwrap() += share;
                    self.totals[s as usize] += share;
                }
            }
        }
        for (k, c) in &self.counts {
            let total = self.totals[key_source(*k) as usize];
            *self.probs.get_mut(k).unwrap() = c / total;
        }
        if let Some(&before) = self.history.last() {
            if ll < before - 1e-9 * before.abs().max(1.0) {
                return Err(AlignError::LikelihoodDecreased { iteration: self.history.len(), before, after: ll });
            }
        }
        self.history.push(ll);
        Ok(ll)
    }

    /// Corpus log-likelihood under the current parameters.
    pub fn log_likelihood(&self) -> f64 {
        let mut ll = 0.0;
        for (s_ids, t_ids) in &self.corpus {
            let norm = libm::log(s_ids.len() as f64);
            for &t in t_ids {
                let denom: f64 = s_ids.iter().map(|&s| self.probs[&key(s, t)]).sum();
                ll += libm::log(denom) - norm;
            }
        }
        ll
    }

    /// Log-likelihoods returned by the steps so far.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn prob(&self, s: &str, t: &str) -> f64 {
        match (self.src.get(s), self.tgt.get(t)) {
            (Some(s), Some(t)) => self.probs.get(&key(s, t)).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Drops entries below `prune`, renormalizes the rows and freezes the
    /// table.
    pub fn finish(self, prune: f64) -> LexiconTable {
        let mut probs = self.probs;
        probs.retain(|_, p| *p >= prune);
        let mut table = LexiconTable { src: self.src, tgt: self.tgt, probs };
        let sums = table.row_sums();
        for (k, p) in table.probs.iter_mut() {
            *p /= sums[key_source(*k) as usize];
        }
        table
    }
}

/// Trains a lexicon with `iterations` EM steps and the default pruning.
/// Returns the table and the log-likelihood seen at each step followed by
/// the final one.
pub fn train_lexicon<'p, I>(pairs: I, iterations: usize) -> Result<(LexiconTable, Vec<f64>), AlignError>
where
    I: IntoIterator<Item = &'p ParallelPair>,
{
    if iterations == 0 {
        return Err(AlignError::ZeroIterations);
    }
    let mut trainer = Ibm1Trainer::new(pairs)?;
    for _ in 0..iterations {
        trainer.step()?;
    }
    let mut history = trainer.history().to_vec();
    history.push(trainer.log_likelihood());
    Ok((trainer.finish(DEFAULT_PRUNE), history))
}

/// Links `(i, j)`: MT position `i` to reference position `j`, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentLinks {
    links: Vec<(usize, usize)>,
}

impl AlignmentLinks {
    pub fn new(mut links: Vec<(usize, usize)>) -> Self {
        links.sort_unstable();
        links.dedup();
        Self { links }
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Space-separated `i-j` pairs.
    pub fn to_pharaoh(&self) -> String {
        let mut out = String::new();
        for (n, (i, j)) in self.links.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{i}-{j}");
        }
        out
    }

    /// Parses a Pharaoh line and checks every link against the sentence
    /// lengths. Links from external aligners may be many-to-many.
    pub fn parse_pharaoh(line: &str, mt_len: usize, ref_len: usize) -> Result<Self, AlignError> {
        let mut links = Vec::new();
        for item in line.split_whitespace() {
            let bad = || AlignError::MalformedLink(item.to_string());
            let (i, j) = item.split_once('-').ok_or_else(bad)?;
            let i: usize = i.parse().map_err(|_| bad())?;
            let j: usize = j.parse().map_err(|_| bad())?;
            if i >= mt_len || j >= ref_len {
                return Err(AlignError::LinkOutOfBounds { i, j, mt_len, ref_len });
            }
            links.push((i, j));
        }
        Ok(Self::new(links))
    }
}

/// Links every MT token to the reference position `j` maximizing
/// `p(ref_j | mt_i)`, ties going to the smallest `j`. A token stays
/// unlinked when it is unknown to the lexicon, when no reference word has
/// mass under it, or when the NULL word explains the winning reference
/// word strictly better.
pub fn align<S: AsRef<str>, T: AsRef<str>>(mt: &[S], reference: &[T], lexicon: &LexiconTable) -> AlignmentLinks {
    let ref_ids: Vec<Option<u32>> = reference.iter().map(|t| lexicon.target_id(t.as_ref())).collect();
    let mut links = Vec::new();
    for (i, word) in mt.iter().enumerate() {
        let Some(sid) = lexicon.source_id(word.as_ref()).filter(|&id| id != 0) else { continue };
        let mut best: Option<(usize, u32, f64)> = None;
        for (j, tid) in ref_ids.iter().enumerate() {
            let Some(tid) = *tid else { continue };
            let p = lexicon.prob_ids(sid, tid);
            if p > best.map_or(0.0, |b| b.2) {
                best = Some((j, tid, p));
            }
        }
        if let Some((j, tid, p)) = best {
            if lexicon.prob_ids(0, tid) <= p {
                links.push((i, j));
            }
        }
    }
    AlignmentLinks { links }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pair(id: u64, s: &str, t: &str) -> ParallelPair {
        ParallelPair::new(
            id,
            s.split(' ').map(ToString::to_string).collect(),
            t.split(' ').map(ToString::to_string).collect(),
        )
        .unwrap()
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| alloc::format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn length_filter_bounds_are_inclusive() {
        let f = AlignmentFilter::default();
        assert!(!f.keeps(&pair(0, &words(4), &words(10))));
        assert!(f.keeps(&pair(0, &words(100), &words(50))));
        assert!(f.keeps(&pair(0, &words(5), &words(5))));
        assert!(!f.keeps(&pair(0, &words(101), &words(50))));
    }

    #[test]
    fn cap_is_deterministic_and_order_preserving() {
        let pairs: Vec<_> = (0..10).map(|i| pair(i, &words(6), &words(6))).collect();
        let f = AlignmentFilter { cap: Some(2), seed: 3, ..Default::default() };
        let run = || f.apply(pairs.iter().cloned().map(Ok::<_, ()>)).unwrap();
        let a = run();
        assert_eq!(a.len(), 2);
        assert!(a[0].id < a[1].id);
        assert_eq!(a, run());
    }

    #[test]
    fn single_pair_converges_to_one() {
        let corpus = vec![pair(0, "a", "x"); 4];
        let (lex, _) = train_lexicon(&corpus, 10).unwrap();
        assert!((lex.prob("a", "x") - 1.0).abs() < 1e-12);
        assert!((lex.null_prob("x") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_and_zero_iterations_fail() {
        assert!(matches!(train_lexicon(&[], 5), Err(AlignError::EmptyCorpus)));
        assert!(matches!(train_lexicon(&[pair(0, "a", "x")], 0), Err(AlignError::ZeroIterations)));
    }

    #[test]
    fn rows_stay_normalized() {
        let corpus =
            vec![pair(0, "das haus", "the house"), pair(1, "das buch", "the book"), pair(2, "ein buch", "a book")];
        let mut trainer = Ibm1Trainer::new(&corpus).unwrap();
        for _ in 0..5 {
            trainer.step().unwrap();
            for s in ["[NULL]", "das", "haus", "buch", "ein"] {
                let sum: f64 = ["the", "house", "book", "a"].iter().map(|t| trainer.prob(s, t)).sum();
                assert!((sum - 1.0).abs() < 1e-12, "{s}: {sum}");
            }
        }
        let lex = trainer.finish(DEFAULT_PRUNE);
        let sum: f64 = lex.row("das").iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < ROW_TOLERANCE);
    }

    #[test]
    fn unknown_tokens_stay_unlinked_and_ties_go_left() {
        let lex =
            LexiconTable::from_entries([("[NULL]", "p", 0.5), ("[NULL]", "q", 0.5), ("a", "p", 0.5), ("a", "q", 0.5)])
                .unwrap();
        assert_eq!(align(&["zz"], &["p"], &lex).links(), &[] as &[(usize, usize)]);
        // Equal probabilities at j = 1 and j = 3: the smaller index wins.
        assert_eq!(align(&["a"], &["r", "p", "s", "q"], &lex).links(), &[(0, 1)]);
    }

    #[test]
    fn null_dominated_words_stay_unlinked() {
        let lex =
            LexiconTable::from_entries([("[NULL]", "p", 0.9), ("[NULL]", "q", 0.1), ("a", "p", 0.2), ("a", "q", 0.8)])
                .unwrap();
        assert_eq!(align(&["a"], &["q"], &lex).links(), &[(0, 0)]);
        assert!(align(&["a"], &["p"], &lex).is_empty());
    }

    #[test]
    fn lexicon_rows_are_validated() {
        assert!(matches!(LexiconTable::from_entries([("a", "x", 0.5)]), Err(AlignError::RowNotNormalized { .. })));
    }

    #[test]
    fn pharaoh_format() {
        let links = AlignmentLinks::new(vec![(1, 0), (0, 2)]);
        assert_eq!(links.to_pharaoh(), "0-2 1-0");
        assert_eq!(AlignmentLinks::parse_pharaoh("0-2 1-0", 2, 3).unwrap(), links);
        assert_eq!(AlignmentLinks::parse_pharaoh("", 2, 3).unwrap(), AlignmentLinks::default());
        assert!(matches!(AlignmentLinks::parse_pharaoh("0:2", 2, 3), Err(AlignError::MalformedLink(_))));
        assert!(matches!(AlignmentLinks::parse_pharaoh("2-0", 2, 3), Err(AlignError::LinkOutOfBounds { .. })));
    }
}
