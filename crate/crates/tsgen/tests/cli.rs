mod common;

use common::{run_pipeline, Workdir};

#[test]
fn toy_pipeline_produces_every_artifact() {
    let w = run_pipeline(1);
    for file in ["golden_ts.tsv", "pseudo_ts.tsv", "qe_ts.tsv", "ind_ts.tsv", "ls.txt", "ind.txt", "finetune.txt"] {
        assert!(w.lines(file) > 0, "{file} is empty");
        assert!(w.path(&format!("{file}.manifest.json")).exists(), "{file} has no manifest");
    }
    assert_eq!(w.lines("golden_ts.tsv"), 400);
    assert_eq!(w.lines("pseudo_ts.tsv"), 3000);
    assert_eq!(w.lines("ls.txt"), w.lines("pseudo_ts.tsv") + w.lines("qe_ts.tsv"));
    assert_eq!(w.lines("finetune.txt"), 700);
    assert_eq!(w.lines("qe.scores"), 1000);
    assert_eq!(w.lines("qe.align"), 1000);

    let skips = w.json("qe_ts.tsv.skips.json");
    assert_eq!(skips["emitted"].as_u64().unwrap() as usize, w.lines("qe_ts.tsv"));

    let report = w.json("ind_ts.tsv.report.json");
    let kept = report["kept"].as_u64().unwrap() as usize;
    let total = report["total"].as_u64().unwrap() as usize;
    assert_eq!(kept, w.lines("ind_ts.tsv"));
    assert_eq!(total, w.lines("pseudo_ts.tsv") + w.lines("qe_ts.tsv"));
    // Roughly 15% of the toy synthetic data is in-domain.
    let fraction = kept as f64 / total as f64;
    assert!((0.10..0.20).contains(&fraction), "kept fraction {fraction}");
    for line in w.read("ind_ts.tsv").lines() {
        assert!(line.starts_with('s'), "general-domain record kept: {line}");
    }

    let manifest = w.json("adequacy.lex.manifest.json");
    assert_eq!(manifest["subcommand"], "train-aligner");
    assert_eq!(manifest["seed"], 7);
    let history = manifest["details"]["log_likelihood"].as_array().unwrap();
    assert_eq!(history.len(), 6);
    for pair in history.windows(2) {
        assert!(pair[1].as_f64().unwrap() >= pair[0].as_f64().unwrap() - 1e-9);
    }

    let stats = w.json("stats.json");
    let per_origin = stats["per_origin"].as_object().unwrap();
    let sum: u64 = per_origin.values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(sum, stats["records"].as_u64().unwrap());

    let bleu = w.json("bleu.json");
    let score = bleu["bleu"].as_f64().unwrap();
    assert!(score > 20.0 && score < 100.0, "bleu {score}");
}

#[test]
fn finetune_rejects_synthetic_records() {
    let w = run_pipeline(1);
    let out = w.tsgen(&["emit-model-input", "--phase", "finetune", "--input", "pseudo_ts.tsv", "-o", "bad.txt"]);
    assert!(!out.status.success());
}

#[test]
fn bad_invocations_fail_with_a_message() {
    let w = Workdir::new();
    std::fs::write(w.path("bad.cfg"), "sede = 3\n").unwrap();
    std::fs::write(w.path("short.txt"), "a b c d e\n").unwrap();
    let cases: [&[&str]; 4] = [
        &["--config", "bad.cfg", "fit-lengths", "--fallback", "-o", "x.json"],
        &["fit-lengths", "--golden", "missing.tsv", "-o", "x.json"],
        &["train-aligner", "--src", "toy/golden.src", "--tgt", "short.txt", "-o", "x.lex"],
        &["--alpha", "2", "fit-lengths", "--fallback", "-o", "x.json"],
    ];
    let expected = ["sede", "missing.tsv", "lines", "alpha"];
    for (args, needle) in cases.iter().zip(expected) {
        let out = w.tsgen(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.starts_with("error:"), "{stderr}");
        assert!(stderr.contains(needle), "{args:?}: {stderr}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let w = Workdir::new();
    w.ok(&["--config", "toy/toy.cfg", "--seed", "11", "fit-lengths", "--fallback", "-o", "l.json"]);
    let manifest = w.json("l.json.manifest.json");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["iterations"], "5");
}
