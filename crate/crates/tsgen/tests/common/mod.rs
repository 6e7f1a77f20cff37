//! Drives the `tsgen` binary over the bundled toy corpus.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TOY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy");

/// A scratch directory holding a copy of the toy corpus under `toy/`.
pub struct Workdir {
    pub dir: tempfile::TempDir,
}

impl Workdir {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let toy = dir.path().join("toy");
        std::fs::create_dir(&toy).unwrap();
        for entry in std::fs::read_dir(TOY).unwrap() {
            let entry = entry.unwrap();
            std::fs::copy(entry.path(), toy.join(entry.file_name())).unwrap();
        }
        Workdir { dir }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.path(rel)).unwrap()
    }

    pub fn json(&self, rel: &str) -> serde_json::Value {
        serde_json::from_str(&self.read(rel)).unwrap()
    }

    pub fn lines(&self, rel: &str) -> usize {
        self.read(rel).lines().count()
    }

    /// Runs `tsgen` inside the directory.
    pub fn tsgen(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_tsgen"))
            .args(args)
            .current_dir(self.dir.path())
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    /// Runs `tsgen` and panics with its stderr on failure.
    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.tsgen(args);
        assert!(out.status.success(), "tsgen {} failed:\n{}", args.join(" "), String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    /// Every file below the directory, keyed by relative path.
    pub fn snapshot(&self) -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        collect(self.dir.path(), self.dir.path(), &mut files);
        files
    }
}

fn collect(root: &Path, dir: &Path, files: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, files);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            files.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

/// Runs every stage over the toy corpus with the given thread count.
pub fn run_pipeline(threads: usize) -> Workdir {
    let w = Workdir::new();
    let t = threads.to_string();
    let run = |args: &[&str]| {
        let mut full = vec!["--config", "toy/toy.cfg", "--threads", &t];
        full.extend_from_slice(args);
        w.ok(&full)
    };
    run(&["fit-lengths", "--golden", "toy/golden.tsv", "-o", "lengths.json"]);
    run(&[
        "build-golden",
        "--src",
        "toy/golden.src",
        "--tgt",
        "toy/golden.tgt",
        "--lengths",
        "lengths.json",
        "-o",
        "golden_ts.tsv",
    ]);
    run(&[
        "build-pseudo",
        "--src",
        "toy/pseudo.src",
        "--tgt",
        "toy/pseudo.mt",
        "--lengths",
        "lengths.json",
        "-o",
        "pseudo_ts.tsv",
    ]);
    run(&["train-aligner", "--src", "toy/pseudo.src", "--tgt", "toy/pseudo.mt", "-o", "adequacy.lex"]);
    run(&["train-aligner", "--src", "toy/qe.mt", "--tgt", "toy/qe.ref", "-o", "mt_ref.lex"]);
    run(&["train-lm", "--input", "toy/golden.tgt", "toy/qe.ref", "-o", "target.lm"]);
    run(&[
        "score-qe",
        "--src",
        "toy/qe.src",
        "--mt",
        "toy/qe.mt",
        "--lm",
        "target.lm",
        "--lexicon",
        "adequacy.lex",
        "-o",
        "qe.scores",
    ]);
    run(&["align", "--mt", "toy/qe.mt", "--ref", "toy/qe.ref", "--lexicon", "mt_ref.lex", "-o", "qe.align"]);
    run(&[
        "build-qe",
        "--src",
        "toy/qe.src",
        "--mt",
        "toy/qe.mt",
        "--ref",
        "toy/qe.ref",
        "--lengths",
        "lengths.json",
        "--scores",
        "qe.scores",
        "--alignments",
        "qe.align",
        "-o",
        "qe_ts.tsv",
    ]);
    run(&[
        "train-discriminator",
        "--golden",
        "toy/golden.tsv",
        "--synthetic",
        "pseudo_ts.tsv",
        "qe_ts.tsv",
        "-o",
        "domain.bin",
    ]);
    run(&["filter-indomain", "--input", "pseudo_ts.tsv", "qe_ts.tsv", "--model", "domain.bin", "-o", "ind_ts.tsv"]);
    run(&["emit-model-input", "--phase", "ls", "--input", "pseudo_ts.tsv", "qe_ts.tsv", "-o", "ls.txt"]);
    run(&["emit-model-input", "--phase", "ind", "--input", "ind_ts.tsv", "-o", "ind.txt"]);
    run(&[
        "emit-model-input",
        "--phase",
        "finetune",
        "--input",
        "toy/golden.tsv",
        "golden_ts.tsv",
        "-o",
        "finetune.txt",
    ]);
    run(&["eval-bleu", "--hyp", "toy/suggestions.hyp", "--ref", "toy/suggestions.ref", "--json", "bleu.json"]);
    run(&["stats", "--input", "golden_ts.tsv", "pseudo_ts.tsv", "qe_ts.tsv", "ind_ts.tsv", "-o", "stats.json"]);
    w
}
