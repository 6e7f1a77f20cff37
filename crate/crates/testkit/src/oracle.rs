//! Slow, obviously-correct reference implementations for cross-checking.

use std::collections::{BTreeMap, BTreeSet};

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

pub type Sentence = Vec<String>;
pub type Table = BTreeMap<(String, String), f64>;

/// Splits on single spaces.
pub fn words(s: &str) -> Sentence {
    s.split(' ').map(str::to_string).collect()
}

/// IBM Model 1 EM by enumerating every alignment vector of every pair.
///
/// Each source sentence gets a leading `[NULL]`. Rows start uniform over the
/// target words they co-occur with.
pub fn brute_force_em(pairs: &[(Sentence, Sentence)], iterations: usize) -> Table {
    let with_null = |src: &Sentence| {
        let mut s = vec!["[NULL]".to_string()];
        s.extend(src.iter().cloned());
        s
    };
    let mut table = Table::new();
    for (src, tgt) in pairs {
        for s in with_null(src) {
            for t in tgt {
                table.insert((s.clone(), t.clone()), 0.0);
            }
        }
    }
    let mut fanout: BTreeMap<String, f64> = BTreeMap::new();
    for (s, _) in table.keys() {
        *fanout.entry(s.clone()).or_default() += 1.0;
    }
    for ((s, _), p) in table.iter_mut() {
        *p = 1.0 / fanout[s];
    }

    for _ in 0..iterations {
        let mut counts: Table = table.keys().map(|k| (k.clone(), 0.0)).collect();
        for (src, tgt) in pairs {
            let src = with_null(src);
            let mut alignments = vec![vec![]];
            for _ in 0..tgt.len() {
                alignments = alignments
                    .into_iter()
                    .flat_map(|a: Vec<usize>| {
                        (0..src.len()).map(move |i| {
                            let mut b = a.clone();
                            b.push(i);
                            b
                        })
                    })
                    .collect();
            }
            let weight = |a: &[usize]| -> f64 {
                a.iter().enumerate().map(|(j, &i)| table[&(src[i].clone(), tgt[j].clone())]).product()
            };
            let z: f64 = alignments.iter().map(|a| weight(a)).sum();
            for a in &alignments {
                let w = weight(a) / z;
                for (j, &i) in a.iter().enumerate() {
                    *counts.get_mut(&(src[i].clone(), tgt[j].clone())).unwrap() += w;
                }
            }
        }
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for ((s, _), c) in &counts {
            *totals.entry(s.clone()).or_default() += c;
        }
        for ((s, t), c) in counts {
            table.insert((s.clone(), t), c / totals[&s]);
        }
    }
    table
}

/// Alignment error rate against sure-only gold links.
pub fn aer<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> f64 {
    let overlap = predicted.intersection(gold).count() as f64;
    1.0 - 2.0 * overlap / (predicted.len() + gold.len()) as f64
}

/// Unsmoothed corpus BLEU-4 with n-grams rendered as joined strings.
pub fn bleu(hyps: &[Sentence], refs: &[Sentence]) -> f64 {
    let grams = |s: &[String], n: usize| -> Vec<String> {
        if s.len() < n {
            return vec![];
        }
        (0..=s.len() - n).map(|i| s[i..i + n].join("\u{1}")).collect()
    };
    let mut log_p = 0.0;
    for n in 1..=4 {
        let (mut matched, mut total) = (0usize, 0usize);
        for (h, r) in hyps.iter().zip(refs) {
            let hg = grams(h, n);
            let rg = grams(r, n);
            let mut seen: Vec<&String> = vec![];
            for g in &hg {
                if seen.contains(&g) {
                    continue;
                }
                seen.push(g);
                let in_h = hg.iter().filter(|x| *x == g).count();
                let in_r = rg.iter().filter(|x| *x == g).count();
                matched += in_h.min(in_r);
            }
            total += hg.len();
        }
        if matched == 0 {
            return 0.0;
        }
        log_p += (matched as f64 / total as f64).ln() / 4.0;
    }
    let c: usize = hyps.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_p.exp()
}

/// Three small corpora mixing partial matches, clipping and short output.
pub fn bleu_mini_corpora() -> Vec<(Vec<Sentence>, Vec<Sentence>)> {
    vec![
        (
            vec![words("the cat is on the mat"), words("there is a cat on the mat today")],
            vec![words("the cat sat on the mat"), words("a cat is on the mat today")],
        ),
        (
            vec![
                words("it is a guide to action which ensures that the military always obeys"),
                words("he read the book"),
            ],
            vec![
                words("it is a guide to action that ensures that the military will forever heed"),
                words("he read the whole book because it was good"),
            ],
        ),
        (
            vec![words("a a a b b c d e"), words("x y z w v"), words("one two three four")],
            vec![words("a b c d e a b"), words("x y z w q"), words("one two three four five")],
        ),
    ]
}

/// Upper-tail p-value of Pearson's statistic over `observed` vs `expected`.
pub fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// One-sided sign test: probability of at least `wins` successes in
/// `trials` fair coin flips.
pub fn sign_test_p(wins: u64, trials: u64) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    1.0 - Binomial::new(0.5, trials).unwrap().cdf(wins - 1)
}
