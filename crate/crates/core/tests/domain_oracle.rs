use std::sync::LazyLock;

use proptest::prelude::*;
use rand::Rng;
use tsgen_core::domain::{build_discriminator_training_set, filter_in_domain, threshold_for_fraction, LabeledSentence};
use tsgen_core::{DomainConfig, DomainModel, Origin, Span, TsRecord};
use tsgen_testkit::{rng, TwoDomains};

fn trained(seed: u64) -> (TwoDomains, DomainModel) {
    let domains = TwoDomains::new(300, seed);
    let mut r = rng(seed + 1);
    let golden: Vec<String> = (0..100).map(|_| domains.sentence(true, &mut r)).collect();
    let synthetic: Vec<String> = (0..1000).map(|_| domains.sentence(false, &mut r)).collect();
    let set = build_discriminator_training_set(&golden, &synthetic, seed).unwrap();
    let (model, _) = DomainModel::train(&set, DomainConfig::default()).unwrap();
    (domains, model)
}

fn record(src: &str) -> TsRecord {
    let src = src.split(' ').map(str::to_string).collect();
    TsRecord::new(src, vec!["[MASK]".into()], vec!["x".into()], Span::new(0, 0), Origin::Pseudo).unwrap()
}

#[test]
fn protocol_counts() {
    let golden: Vec<String> = (0..100).map(|i| format!("g {i}")).collect();
    let synthetic: Vec<String> = (0..10_000).map(|i| format!("s {i}")).collect();
    let set = build_discriminator_training_set(&golden, &synthetic, 1).unwrap();
    assert_eq!(set.iter().filter(|s| s.in_domain).count(), 1000);
    assert_eq!(set.iter().filter(|s| !s.in_domain).count(), 1000);
    for g in &golden {
        assert_eq!(set.iter().filter(|s| s.in_domain && &s.text == g).count(), 10);
    }
}

#[test]
fn held_out_accuracy_on_disjoint_domains() {
    let domains = TwoDomains::new(300, 7);
    let mut r = rng(8);
    let mut set: Vec<LabeledSentence> = (0..2000)
        .map(|k| LabeledSentence { text: domains.sentence(k % 2 == 0, &mut r), in_domain: k % 2 == 0 })
        .collect();
    let test = set.split_off(1000);
    let (model, losses) = DomainModel::train(&set, DomainConfig::default()).unwrap();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    let correct = test.iter().filter(|s| (model.score(&s.text) > 0.5) == s.in_domain).count();
    assert!(correct as f64 / test.len() as f64 >= 0.95, "{correct} / {}", test.len());
}

#[test]
fn extreme_thresholds() {
    let (domains, model) = trained(3);
    let mut r = rng(4);
    let records: Vec<TsRecord> = (0..200).map(|k| record(&domains.sentence(k % 3 == 0, &mut r))).collect();
    let (kept, report) = filter_in_domain(records.clone(), &model, 1.0);
    assert!(kept.is_empty());
    assert_eq!(report.total, 200);
    let (kept, _) = filter_in_domain(records.clone(), &model, 0.0);
    assert_eq!(kept, records);
}

#[test]
fn target_fraction_keeps_eight_percent() {
    let (domains, model) = trained(5);
    let mut r = rng(6);
    let stream: Vec<String> = (0..100_000).map(|_| domains.sentence(r.gen_bool(0.2), &mut r)).collect();
    let scores: Vec<f64> = stream.iter().map(|s| model.score(s)).collect();
    let theta = threshold_for_fraction(&scores, 0.08);
    let kept = scores.iter().filter(|&&s| s > theta).count() as f64 / scores.len() as f64;
    assert!((kept - 0.08).abs() <= 0.005, "kept {kept}");
}

static MIXED: LazyLock<(DomainModel, Vec<TsRecord>)> = LazyLock::new(|| {
    let (domains, model) = trained(9);
    let mut r = rng(10);
    let records = (0..300).map(|k| record(&domains.sentence(k % 4 == 0, &mut r))).collect();
    (model, records)
});

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn filtering_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (model, records) = &*MIXED;
        let (loose, _) = filter_in_domain(records.clone(), model, lo);
        let (strict, _) = filter_in_domain(records.clone(), model, hi);
        // Both outputs are subsequences of the input and strict is inside loose.
        let mut it = loose.iter();
        prop_assert!(strict.iter().all(|s| it.any(|l| l == s)));
        let mut it = records.iter();
        prop_assert!(loose.iter().all(|s| it.any(|l| l == s)));
    }
}
