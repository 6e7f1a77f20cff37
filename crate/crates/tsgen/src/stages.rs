//! One function per subcommand.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::info;
use serde_json::json;
use tsgen_core::align::{align as align_pair, AlignmentLinks, Ibm1Trainer};
use tsgen_core::bleu::{corpus_stats, BleuStats, MAX_ORDER};
use tsgen_core::confidence::{parse_score_line, score_words};
use tsgen_core::domain::{build_discriminator_training_set, threshold_for_fraction};
use tsgen_core::qe::{build_qe_record, Links, QeTriple, Scores, SkipCounts, SkipReason};
use tsgen_core::span::SpanError;
use tsgen_core::{
    build_model_input, serialize_record, tokenize, BidirectionalLm, DatasetStats, DomainModel, LengthDistribution,
    Origin, SpanMasker, TsRecord,
};

use crate::cli::{MaskArgs, Phase};
use crate::config::Config;
use crate::io::{self, Lockstep, ParallelReader};
use crate::manifest::{sidecar, write_json, Recorder};
use crate::parallel::Workers;
use crate::persist;

fn workers(config: &Config) -> anyhow::Result<Workers> {
    Workers::new(config.threads, config.chunk_size)
}

/// Line-buffered writer for a data output.
struct LineSink {
    path: PathBuf,
    out: std::io::BufWriter<std::fs::File>,
}

impl LineSink {
    fn create(path: &Path) -> anyhow::Result<Self> {
        Ok(Self { path: path.to_path_buf(), out: io::create(path)? })
    }

    fn line(&mut self, text: &str) -> anyhow::Result<()> {
        self.out
            .write_all(text.as_bytes())
            .and_then(|()| self.out.write_all(b"\n"))
            .with_context(|| self.path.display().to_string())
    }

    fn finish(mut self) -> anyhow::Result<()> {
        self.out.flush().with_context(|| self.path.display().to_string())
    }
}

fn read_all_records(paths: &[PathBuf]) -> anyhow::Result<Vec<(usize, TsRecord)>> {
    let mut out = Vec::new();
    for (k, path) in paths.iter().enumerate() {
        out.extend(io::read_records(path)?.into_iter().map(|r| (k, r)));
    }
    Ok(out)
}

pub fn fit_lengths(config: &Config, golden: Option<&Path>, fallback: bool, output: &Path) -> anyhow::Result<()> {
    let mut rec = Recorder::new("fit-lengths", config);
    let dist = match (golden, fallback) {
        (_, true) => LengthDistribution::fallback(),
        (Some(path), false) => {
            let records = io::read_records(path)?;
            rec.input(path);
            rec.count("records", records.len() as u64);
            if records.is_empty() {
                bail!(
                    "{}: no golden records to fit; rerun with --fallback to use the built-in distribution",
                    path.display()
                );
            }
            LengthDistribution::fit(records.iter().map(|r| r.span.len()))?
        }
        (None, false) => bail!("fit-lengths needs --golden or --fallback"),
    };
    persist::write_lengths(output, &dist)?;
    rec.output(output);
    rec.detail("fallback", fallback);
    rec.write()?;
    info!("fit-lengths: {} lengths up to {}", dist.support().count(), dist.max_len());
    Ok(())
}

pub fn build_masked(config: &Config, args: &MaskArgs, origin: Origin) -> anyhow::Result<()> {
    let dist = persist::read_lengths(&args.lengths)?;
    let masker = SpanMasker::new(&dist, origin, config.seed)?;
    let mut reader = ParallelReader::open(&args.src, &args.tgt)?;
    let mut sink = LineSink::create(&args.output)?;
    let (mut pairs, mut records, mut unsampleable) = (0u64, 0u64, 0u64);
    workers(config)?.stream(
        reader.by_ref().map(|p| p.map_err(anyhow::Error::from)),
        |pair| masker.mask_pair(&pair),
        |outcome| {
            pairs += 1;
            match outcome {
                Ok(record) => {
                    records += 1;
                    sink.line(&serialize_record(&record)?)
                }
                Err(SpanError::Unsampleable { .. }) => {
                    unsampleable += 1;
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        },
    )?;
    sink.finish()?;
    let empty = reader.skipped();

    let meta = sidecar(&args.output, "meta.json");
    write_json(
        &meta,
        &json!({
            "origin": origin.as_str(),
            "seed": config.seed,
            "distribution": dist.support().collect::<Vec<_>>(),
            "pairs": pairs,
            "records": records,
            "skipped": { "empty_line": empty, "unsampleable": unsampleable },
        }),
    )?;
    let mut rec = Recorder::new(if origin == Origin::Golden { "build-golden" } else { "build-pseudo" }, config);
    for p in [&args.src, &args.tgt, &args.lengths] {
        rec.input(p);
    }
    rec.output(&args.output);
    rec.output(&meta);
    rec.count("pairs", pairs);
    rec.count("records", records);
    rec.count("skipped_empty_line", empty);
    rec.count("skipped_unsampleable", unsampleable);
    rec.write()?;
    info!("{}: {records} records from {pairs} pairs", origin.as_str());
    Ok(())
}

pub fn train_aligner(config: &Config, src: &Path, tgt: &Path, output: &Path) -> anyhow::Result<()> {
    let mut reader = ParallelReader::open(src, tgt)?;
    let mut read = 0u64;
    let pairs = config.alignment_filter().apply(reader.by_ref().inspect(|_| read += 1))?;
    if pairs.is_empty() {
        bail!("no pairs with both sides in {}..={} tokens", config.align_min_len, config.align_max_len);
    }
    let mut trainer = Ibm1Trainer::new(&pairs)?;
    for i in 0..config.iterations {
        let ll = trainer.step()?;
        info!("train-aligner: iteration {} log-likelihood {ll:.4}", i + 1);
    }
    let mut history = trainer.history().to_vec();
    history.push(trainer.log_likelihood());
    let lexicon = trainer.finish(config.prune_threshold);
    persist::write_lexicon(output, &lexicon)?;

    let mut rec = Recorder::new("train-aligner", config);
    rec.input(src);
    rec.input(tgt);
    rec.output(output);
    rec.count("pairs_read", read);
    rec.count("pairs_trained", pairs.len() as u64);
    rec.count("skipped_empty_line", reader.skipped());
    rec.count("entries", lexicon.len() as u64);
    rec.detail("log_likelihood", history);
    rec.write()?;
    Ok(())
}

/// Tokenized rows of aligned files with their 0-based line numbers.
fn tokenized_rows(paths: &[&Path]) -> anyhow::Result<impl Iterator<Item = anyhow::Result<(u64, Vec<Vec<String>>)>>> {
    let lines = Lockstep::open(paths)?;
    Ok(lines.enumerate().map(|(i, row)| Ok((i as u64, row?.iter().map(|l| tokenize(l)).collect()))))
}

pub fn align(config: &Config, mt: &Path, reference: &Path, lexicon: &Path, output: &Path) -> anyhow::Result<()> {
    let table = persist::read_lexicon(lexicon)?;
    let mut sink = LineSink::create(output)?;
    let (mut lines, mut links) = (0u64, 0u64);
    workers(config)?.stream(
        tokenized_rows(&[mt, reference])?,
        |(_, row)| align_pair(&row[0], &row[1], &table),
        |found: AlignmentLinks| {
            lines += 1;
            links += found.len() as u64;
            sink.line(&found.to_pharaoh())
        },
    )?;
    sink.finish()?;
    let mut rec = Recorder::new("align", config);
    for p in [mt, reference, lexicon] {
        rec.input(p);
    }
    rec.output(output);
    rec.count("lines", lines);
    rec.count("links", links);
    rec.write()?;
    Ok(())
}

pub fn train_lm(config: &Config, inputs: &[PathBuf], output: &Path) -> anyhow::Result<()> {
    let mut sentences = Vec::new();
    let mut empty = 0u64;
    for path in inputs {
        for tokens in io::read_tokenized(path)? {
            if tokens.is_empty() {
                empty += 1;
            } else {
                sentences.push(tokens);
            }
        }
    }
    let lm = BidirectionalLm::train(&sentences, config.lm_order, config.lm_discount)?;
    persist::write_lm(output, &lm)?;
    let mut rec = Recorder::new("train-lm", config);
    inputs.iter().for_each(|p| rec.input(p));
    rec.output(output);
    rec.count("sentences", sentences.len() as u64);
    rec.count("skipped_empty_line", empty);
    rec.count("ngrams", (lm.forward.counts().len() + lm.backward.counts().len()) as u64);
    rec.write()?;
    Ok(())
}

pub fn score_qe(
    config: &Config,
    src: &Path,
    mt: &Path,
    lm: &Path,
    lexicon: &Path,
    output: &Path,
) -> anyhow::Result<()> {
    let model = persist::read_lm(lm)?;
    let table = persist::read_lexicon(lexicon)?;
    let mut sink = LineSink::create(output)?;
    let (mut lines, mut empty) = (0u64, 0u64);
    workers(config)?.stream(
        tokenized_rows(&[src, mt])?,
        |(_, row)| (!row[1].is_empty()).then(|| score_words(&row[0], &row[1], &model, &table, config.alpha).to_line()),
        |line| {
            lines += 1;
            empty += u64::from(line.is_none());
            sink.line(line.as_deref().unwrap_or(""))
        },
    )?;
    sink.finish()?;
    let mut rec = Recorder::new("score-qe", config);
    for p in [src, mt, lm, lexicon] {
        rec.input(p);
    }
    rec.output(output);
    rec.count("lines", lines);
    rec.count("empty_lines", empty);
    rec.write()?;
    Ok(())
}

pub enum ScoreSource {
    File(PathBuf),
    Models { lm: PathBuf, lexicon: PathBuf },
}

pub enum LinkSource {
    File(PathBuf),
    Lexicon(PathBuf),
}

pub struct QeInputs {
    pub src: PathBuf,
    pub mt: PathBuf,
    pub reference: PathBuf,
    pub lengths: PathBuf,
    pub scores: ScoreSource,
    pub links: LinkSource,
}

/// One triple with its optional raw score and link lines.
struct QeRow {
    triple: QeTriple,
    line: usize,
    scores: Option<String>,
    links: Option<String>,
}

pub fn build_qe(config: &Config, inputs: &QeInputs, output: &Path) -> anyhow::Result<()> {
    let dist = persist::read_lengths(&inputs.lengths)?;
    let mut paths: Vec<&Path> = vec![&inputs.src, &inputs.mt, &inputs.reference];
    let models = match &inputs.scores {
        ScoreSource::File(p) => {
            paths.push(p);
            None
        }
        ScoreSource::Models { lm, lexicon } => Some((persist::read_lm(lm)?, persist::read_lexicon(lexicon)?)),
    };
    let align_lexicon = match &inputs.links {
        LinkSource::File(p) => {
            paths.push(p);
            None
        }
        LinkSource::Lexicon(p) => Some(persist::read_lexicon(p)?),
    };
    let score_col = matches!(inputs.scores, ScoreSource::File(_)).then_some(3);
    let link_col = matches!(inputs.links, LinkSource::File(_)).then(|| paths.len() - 1);

    let mut empty = 0u64;
    let rows = Lockstep::open(&paths)?.enumerate().filter_map(|(i, row)| {
        let row = match row {
            Ok(row) => row,
            Err(e) => return Some(Err(anyhow::Error::from(e))),
        };
        let triple =
            QeTriple { id: i as u64, src: tokenize(&row[0]), mt: tokenize(&row[1]), reference: tokenize(&row[2]) };
        if triple.src.is_empty() || triple.mt.is_empty() || triple.reference.is_empty() {
            empty += 1;
            return None;
        }
        let pick = |col: Option<usize>| col.map(|c| row[c].clone());
        Some(Ok(QeRow { triple, line: i + 1, scores: pick(score_col), links: pick(link_col) }))
    });

    let qe = config.qe();
    let build = |row: QeRow| -> anyhow::Result<Result<TsRecord, SkipReason>> {
        let t = &row.triple;
        let external_scores = match &row.scores {
            Some(text) => Some(parse_score_line(text, t.mt.len(), row.line)?),
            None => None,
        };
        let scores = match (&external_scores, &models) {
            (Some(conf), _) => Scores::External(conf),
            (None, Some((lm, lexicon))) => Scores::Statistical { lm, lexicon },
            (None, None) => unreachable!("score source is resolved above"),
        };
        let external_links = match &row.links {
            Some(text) => Some(
                AlignmentLinks::parse_pharaoh(text, t.mt.len(), t.reference.len())
                    .with_context(|| format!("alignments line {}", row.line))?,
            ),
            None => None,
        };
        let links = match (&external_links, &align_lexicon) {
            (Some(l), _) => Links::External(l),
            (None, Some(lexicon)) => Links::Lexicon(lexicon),
            (None, None) => unreachable!("link source is resolved above"),
        };
        Ok(build_qe_record(t, scores, links, &dist, &qe))
    };

    let mut sink = LineSink::create(output)?;
    let mut counts = SkipCounts::default();
    workers(config)?.stream(rows, build, |outcome| {
        let outcome = outcome?;
        counts.record(&outcome);
        match outcome {
            Ok(record) => sink.line(&serialize_record(&record)?),
            Err(_) => Ok(()),
        }
    })?;
    sink.finish()?;

    let skips: BTreeMap<&str, u64> = SkipReason::ALL.iter().map(|r| (r.as_str(), counts.get(*r))).collect();
    let skip_path = sidecar(output, "skips.json");
    write_json(
        &skip_path,
        &json!({ "triples": counts.total(), "emitted": counts.emitted, "skips": skips, "empty_line": empty }),
    )?;
    let mut rec = Recorder::new("build-qe", config);
    paths.iter().for_each(|p| rec.input(p));
    rec.input(&inputs.lengths);
    if let ScoreSource::Models { lm, lexicon } = &inputs.scores {
        rec.input(lm);
        rec.input(lexicon);
    }
    if let LinkSource::Lexicon(p) = &inputs.links {
        rec.input(p);
    }
    rec.output(output);
    rec.output(&skip_path);
    rec.count("triples", counts.total());
    rec.count("records", counts.emitted);
    rec.count("skipped_empty_line", empty);
    for (reason, n) in &skips {
        rec.count(&format!("skipped_{reason}"), *n);
    }
    rec.write()?;
    info!("build-qe: {} records from {} triples", counts.emitted, counts.total());
    Ok(())
}

fn sources(paths: &[PathBuf]) -> anyhow::Result<Vec<String>> {
    Ok(read_all_records(paths)?.into_iter().map(|(_, r)| r.src.join(" ")).collect())
}

pub fn train_discriminator(
    config: &Config,
    golden: &[PathBuf],
    synthetic: &[PathBuf],
    output: &Path,
) -> anyhow::Result<()> {
    let positives = sources(golden)?;
    let negatives = sources(synthetic)?;
    let set = build_discriminator_training_set(&positives, &negatives, config.seed)?;
    let (model, losses) = DomainModel::train(&set, config.domain())?;
    persist::write_domain_model(output, &model)?;
    let mut rec = Recorder::new("train-discriminator", config);
    golden.iter().chain(synthetic).for_each(|p| rec.input(p));
    rec.output(output);
    rec.count("golden", positives.len() as u64);
    rec.count("synthetic", negatives.len() as u64);
    rec.count("training_examples", set.len() as u64);
    rec.detail("epoch_loss", losses);
    rec.write()?;
    Ok(())
}

pub fn filter_indomain(config: &Config, inputs: &[PathBuf], model: &Path, output: &Path) -> anyhow::Result<()> {
    let model_data = persist::read_domain_model(model)?;
    let records: Vec<TsRecord> = read_all_records(inputs)?.into_iter().map(|(_, r)| r).collect();
    let scores = workers(config)?.map(records.iter().collect(), |r| model_data.score_record(r));
    let (threshold, mode) = match config.target_fraction {
        Some(fraction) => (threshold_for_fraction(&scores, fraction), "target_fraction"),
        None => (config.theta, "theta"),
    };
    let mut sink = LineSink::create(output)?;
    let mut kept = 0u64;
    for (record, score) in records.iter().zip(&scores) {
        if *score > threshold {
            kept += 1;
            sink.line(&serialize_record(record)?)?;
        }
    }
    sink.finish()?;
    let report_path = sidecar(output, "report.json");
    let total = records.len() as u64;
    write_json(
        &report_path,
        &json!({
            "kept": kept,
            "total": total,
            "threshold": threshold,
            "mode": mode,
            "target_fraction": config.target_fraction,
            "kept_fraction": if total == 0 { 0.0 } else { kept as f64 / total as f64 },
        }),
    )?;
    let mut rec = Recorder::new("filter-indomain", config);
    inputs.iter().for_each(|p| rec.input(p));
    rec.input(model);
    rec.output(output);
    rec.output(&report_path);
    rec.count("kept", kept);
    rec.count("total", total);
    rec.detail("threshold", threshold);
    rec.write()?;
    info!("filter-indomain: kept {kept} of {total} (threshold {threshold})");
    Ok(())
}

pub fn emit_model_input(config: &Config, phase: Phase, inputs: &[PathBuf], output: &Path) -> anyhow::Result<()> {
    let records = read_all_records(inputs)?;
    let mut sink = LineSink::create(output)?;
    for (k, record) in &records {
        if phase == Phase::Finetune && record.origin != Origin::Golden {
            bail!(
                "{}: the finetune phase takes golden records only, found origin {}",
                inputs[*k].display(),
                record.origin
            );
        }
        let (input, suggestion) = build_model_input(record);
        sink.line(&format!("{}\t{}", input.join(" "), suggestion.join(" ")))?;
    }
    sink.finish()?;
    let mut rec = Recorder::new("emit-model-input", config);
    inputs.iter().for_each(|p| rec.input(p));
    rec.output(output);
    rec.count("records", records.len() as u64);
    rec.detail("phase", phase.as_str());
    rec.write()?;
    Ok(())
}

/// Whitespace-split lines; BLEU inputs are already tokenized.
fn segments(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    io::LineReader::open(path)?.map(|l| Ok(l?.split_whitespace().map(str::to_string).collect())).collect()
}

pub fn bleu_report(stats: &BleuStats, segments: usize, smooth: bool) -> serde_json::Value {
    json!({
        "bleu": stats.score(smooth),
        "precisions": (1..=MAX_ORDER).map(|n| stats.precision(n)).collect::<Vec<_>>(),
        "brevity_penalty": stats.brevity_penalty(),
        "hyp_len": stats.hyp_len,
        "ref_len": stats.ref_len,
        "segments": segments,
        "smooth": smooth,
    })
}

pub fn eval_bleu(config: &Config, hyp: &Path, reference: &Path, json_out: Option<&Path>) -> anyhow::Result<()> {
    let hyps = segments(hyp)?;
    let refs = segments(reference)?;
    let stats = corpus_stats(&hyps, &refs).with_context(|| format!("{} vs {}", hyp.display(), reference.display()))?;
    let report = bleu_report(&stats, hyps.len(), config.smooth);
    println!("BLEU = {:.2}", stats.score(config.smooth));
    println!("{report}");
    if let Some(path) = json_out {
        write_json(path, &report)?;
        let mut rec = Recorder::new("eval-bleu", config);
        rec.input(hyp);
        rec.input(reference);
        rec.output(path);
        rec.count("segments", hyps.len() as u64);
        rec.write()?;
    }
    Ok(())
}

fn histogram(h: &BTreeMap<usize, u64>) -> BTreeMap<String, u64> {
    h.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn stats(config: &Config, inputs: &[PathBuf], output: Option<&Path>) -> anyhow::Result<()> {
    let mut total = DatasetStats::default();
    let mut per_file = Vec::new();
    for path in inputs {
        let records = io::read_records(path)?;
        let s = DatasetStats::from_records(&records);
        per_file.push(json!({ "path": path.display().to_string(), "records": s.records }));
        total.merge(&s);
    }
    let per_origin: BTreeMap<&str, u64> = Origin::ALL.iter().map(|o| (o.as_str(), total.count(*o))).collect();
    let report = json!({
        "records": total.records,
        "per_origin": per_origin,
        "span_lengths": histogram(&total.span_lengths),
        "suggestion_lengths": histogram(&total.suggestion_lengths),
        "mean_source_len": total.mean_source_len(),
        "inputs": per_file,
    });
    println!("{:<8} {:>10}", "origin", "records");
    for (origin, n) in &per_origin {
        println!("{origin:<8} {n:>10}");
    }
    println!("{:<8} {:>10}", "total", total.records);
    println!("mean source length {:.2}", total.mean_source_len());
    if let Some(path) = output {
        write_json(path, &report)?;
        let mut rec = Recorder::new("stats", config);
        inputs.iter().for_each(|p| rec.input(p));
        rec.output(path);
        rec.count("records", total.records);
        for (origin, n) in &per_origin {
            rec.count(origin, *n);
        }
        rec.write()?;
    }
    Ok(())
}
