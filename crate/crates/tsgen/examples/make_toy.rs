//! Regenerates the bundled toy corpus under `data/toy`.
//!
//! ```text
//! cargo run -p tsgen --example make_toy
//! ```
//!
//! Two synthetic language pairs stand in for the in-domain and general
//! domains. Golden data comes from the in-domain pair only; the pseudo and
//! QE corpora mix both. MT output is the reference with random word
//! substitutions.

use std::path::Path;

use rand::Rng;
use tsgen_core::span::{mask_span, sample_span};
use tsgen_core::{serialize_record, LengthDistribution, Origin, TsRecord};
use tsgen_testkit::{corrupt, rng, ParallelLanguage, TestRng};

const SEED: u64 = 2022;

fn write(dir: &Path, name: &str, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(dir.join(name), text).unwrap();
}

fn pair(lang: &ParallelLanguage, r: &mut TestRng) -> (Vec<String>, Vec<String>) {
    let len = r.gen_range(5..25);
    lang.pair(len, r)
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    std::fs::create_dir_all(&dir).unwrap();
    let inside = ParallelLanguage::with_prefixes("s", "t", 300, SEED);
    let outside = ParallelLanguage::with_prefixes("u", "v", 300, SEED + 1);
    let mut r = rng(SEED);

    // Golden parallel corpus and the annotated golden records.
    let golden: Vec<_> = (0..400).map(|_| pair(&inside, &mut r)).collect();
    write(&dir, "golden.src", &golden.iter().map(|p| p.0.join(" ")).collect::<Vec<_>>());
    write(&dir, "golden.tgt", &golden.iter().map(|p| p.1.join(" ")).collect::<Vec<_>>());
    let annotated = LengthDistribution::from_probs([(1, 0.35), (2, 0.25), (3, 0.2), (4, 0.12), (6, 0.08)]).unwrap();
    let records: Vec<String> = (0..300)
        .map(|_| {
            let (src, tgt) = pair(&inside, &mut r);
            let span = sample_span(tgt.len(), &annotated, &mut r).unwrap();
            let (masked, suggestion) = mask_span(&tgt, span.start, span.end).unwrap();
            let record = TsRecord::new(src, masked, suggestion, span, Origin::Golden).unwrap();
            serialize_record(&record).unwrap()
        })
        .collect();
    write(&dir, "golden.tsv", &records);

    // Pseudo-parallel corpus: source plus noisy MT output, mostly general domain.
    let mut src = Vec::new();
    let mut mt = Vec::new();
    for _ in 0..3000 {
        let lang = if r.gen_bool(0.15) { &inside } else { &outside };
        let (s, t) = pair(lang, &mut r);
        let k = r.gen_range(0..2);
        let (noisy, _) = corrupt(&t, k, &lang.target_words, &mut r);
        src.push(s.join(" "));
        mt.push(noisy.join(" "));
    }
    write(&dir, "pseudo.src", &src);
    write(&dir, "pseudo.mt", &mt);

    // QE triples: references with two substitutions as MT output.
    let (mut src, mut mt, mut reference) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..1000 {
        let lang = if r.gen_bool(0.15) { &inside } else { &outside };
        let (s, t) = pair(lang, &mut r);
        let (noisy, _) = corrupt(&t, 2, &lang.target_words, &mut r);
        src.push(s.join(" "));
        mt.push(noisy.join(" "));
        reference.push(t.join(" "));
    }
    write(&dir, "qe.src", &src);
    write(&dir, "qe.mt", &mt);
    write(&dir, "qe.ref", &reference);

    // Predicted and reference suggestions for eval-bleu.
    let (mut hyp, mut refs) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let (_, t) = pair(&inside, &mut r);
        let n = r.gen_range(4..8).min(t.len());
        let gold = t[..n].to_vec();
        let k = r.gen_range(0..3);
        let (guess, _) = corrupt(&gold, k, &inside.target_words, &mut r);
        hyp.push(guess.join(" "));
        refs.push(gold.join(" "));
    }
    write(&dir, "suggestions.hyp", &hyp);
    write(&dir, "suggestions.ref", &refs);
}
