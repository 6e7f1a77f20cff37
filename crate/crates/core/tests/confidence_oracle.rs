use proptest::prelude::*;
use rand::Rng;
use tsgen_core::align::{train_lexicon, LexiconTable};
use tsgen_core::confidence::{adequacy, lowest_mean_window, score_words, select_low_confidence_span, ConfidenceVector};
use tsgen_core::lm::{BidirectionalLm, DEFAULT_DISCOUNT};
use tsgen_core::{rng as core_rng, LengthDistribution, ParallelPair, SpanSelection};
use tsgen_testkit::oracle::sign_test_p;
use tsgen_testkit::{corrupt, rng, ParallelLanguage};

struct Models {
    lang: ParallelLanguage,
    train: Vec<ParallelPair>,
    lm: BidirectionalLm,
    lexicon: LexiconTable,
}

fn models() -> Models {
    let lang = ParallelLanguage::new(200, 21);
    let mut r = rng(22);
    let mut train: Vec<ParallelPair> = (0..5000)
        .map(|id| {
            let len = r.gen_range(5..20);
            let (s, t) = lang.pair(len, &mut r);
            ParallelPair::new(id, s, t).unwrap()
        })
        .collect();
    // One sentence pair seen many times.
    let frequent = train[0].clone();
    train.extend((0..1000).map(|k| ParallelPair { id: 5000 + k, ..frequent.clone() }));
    let lm = BidirectionalLm::train(train.iter().map(|p| &p.tgt[..]), 3, DEFAULT_DISCOUNT).unwrap();
    let (lexicon, _) = train_lexicon(&train, 5).unwrap();
    Models { lang, train, lm, lexicon }
}

fn held_out(m: &Models, n: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    let mut r = rng(seed);
    (0..n).map(|_| m.lang.pair(r.gen_range(5..20), &mut r)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn frequent_training_sentence_scores_above_the_median() {
    let m = models();
    let scores: Vec<f64> = held_out(&m, 1000, 23)
        .iter()
        .flat_map(|(s, t)| score_words(s, t, &m.lm, &m.lexicon, 0.5).scores().to_vec())
        .collect();
    let med = median(scores);
    let frequent = &m.train[0];
    let conf = score_words(&frequent.src, &frequent.tgt, &m.lm, &m.lexicon, 0.5);
    assert!(conf.scores().iter().all(|&s| s > med), "{:?} vs median {med}", conf.scores());
}

#[test]
fn a_single_corruption_is_usually_the_minimum() {
    let m = models();
    let mut r = rng(24);
    let mut hits = 0;
    for (src, reference) in held_out(&m, 1000, 25) {
        let (mt, pos) = corrupt(&reference, 1, &m.lang.target_words, &mut r);
        let conf = score_words(&src, &mt, &m.lm, &m.lexicon, 0.5);
        let s = conf.scores();
        if s.iter().enumerate().all(|(j, &v)| j == pos[0] || v > s[pos[0]]) {
            hits += 1;
        }
    }
    assert!(hits >= 800, "{hits} / 1000");
}

#[test]
fn corrupted_positions_score_lower_under_a_sign_test() {
    let m = models();
    let mut r = rng(26);
    let (mut wins, mut trials) = (0u64, 0u64);
    for (src, reference) in held_out(&m, 300, 27) {
        let (mt, pos) = corrupt(&reference, 2, &m.lang.target_words, &mut r);
        let conf = score_words(&src, &mt, &m.lm, &m.lexicon, 0.5);
        let mean = |keep: &dyn Fn(usize) -> bool| {
            let v: Vec<f64> = conf.scores().iter().enumerate().filter(|(j, _)| keep(*j)).map(|x| *x.1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (bad, good) = (mean(&|j| pos.contains(&j)), mean(&|j| !pos.contains(&j)));
        if bad != good {
            trials += 1;
            wins += u64::from(bad < good);
        }
    }
    let p = sign_test_p(wins, trials);
    assert!(p < 0.01, "{wins} / {trials}, p = {p}");
}

#[test]
fn adequacy_ignores_the_rest_of_the_translation() {
    let m = models();
    let (src, mt) = m.lang.pair(10, &mut rng(28));
    let base = score_words(&src, &mt, &m.lm, &m.lexicon, 0.5);
    // With alpha = 0 the score is adequacy alone.
    let only_adequacy = score_words(&src, &mt, &m.lm, &m.lexicon, 0.0);
    let mut shuffled = mt.clone();
    shuffled[1..].reverse();
    let again = score_words(&src, &shuffled, &m.lm, &m.lexicon, 0.0);
    assert_eq!(only_adequacy.scores()[0], again.scores()[0]);
    for (j, w) in mt.iter().enumerate() {
        assert_eq!(only_adequacy.scores()[j], adequacy(&src, w, &m.lexicon).min(1.0));
    }
    assert_eq!(base.len(), mt.len());
}

proptest! {
    #[test]
    fn selected_window_is_never_beaten(
        scores in proptest::collection::vec(0.0f64..=1.0, 1..9),
        len in 1usize..9,
        tau in 0.0f64..=1.0,
    ) {
        let conf = ConfidenceVector::new(scores.clone()).unwrap();
        let dist = LengthDistribution::from_probs([(len, 1.0)]).unwrap();
        match select_low_confidence_span(&conf, &dist, tau, &mut core_rng::seeded(0)) {
            SpanSelection::Selected(span) => {
                prop_assert_eq!(span.len(), len);
                let mean = scores[span.start..=span.end].iter().sum::<f64>() / len as f64;
                prop_assert!(mean <= tau);
                for start in 0..=scores.len() - len {
                    let other = scores[start..start + len].iter().sum::<f64>() / len as f64;
                    prop_assert!(mean <= other);
                    if start < span.start {
                        prop_assert!(mean < other);
                    }
                }
            }
            SpanSelection::Confident => {
                let (_, mean) = lowest_mean_window(&scores, len).unwrap();
                prop_assert!(mean > tau);
            }
            SpanSelection::Unsampleable => prop_assert!(len > scores.len()),
        }
    }
}
