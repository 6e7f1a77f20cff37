//! Command-line interface. Each subcommand runs one pipeline stage and
//! writes its outputs plus a `<output>.manifest.json`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;
use crate::stages;

#[derive(Debug, Parser)]
#[command(name = "tsgen", version, about = "Build synthetic translation-suggestion training data")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    /// Source sentences, one per line.
    #[arg(long)]
    pub src: PathBuf,
    /// Target sentences (references or MT output), aligned with --src.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Span-length distribution from `fit-lengths`.
    #[arg(long)]
    pub lengths: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Phase {
    /// Large-scale synthetic data.
    Ls,
    /// In-domain filtered synthetic data.
    Ind,
    /// Golden data for the final fine-tuning stage.
    Finetune,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Ls => "ls",
            Phase::Ind => "ind",
            Phase::Finetune => "finetune",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the span-length distribution from golden records.
    FitLengths {
        /// Golden TS records.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Write the built-in fallback distribution instead.
        #[arg(long, conflicts_with = "golden")]
        fallback: bool,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Mask random spans of a golden parallel corpus.
    BuildGolden(MaskArgs),
    /// Mask random spans of a pseudo-parallel corpus (source, MT output).
    BuildPseudo(MaskArgs),
    /// Train an IBM Model 1 lexicon p(tgt | src).
    TrainAligner {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Align MT output to references and write Pharaoh links.
    Align {
        #[arg(long)]
        mt: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Lexicon trained with `train-aligner --src <mt> --tgt <ref>`.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train forward and backward n-gram models on target-language text.
    TrainLm {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Write word-level confidence scores for MT output.
    ScoreQe {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        lm: PathBuf,
        /// Lexicon trained with `train-aligner --src <src> --tgt <target>`.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Build records from low-confidence MT spans and aligned references.
    BuildQe {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        mt: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        lengths: PathBuf,
        /// Precomputed scores (from `score-qe` or an external model).
        #[arg(long, conflicts_with_all = ["lm", "lexicon"])]
        scores: Option<PathBuf>,
        #[arg(long, requires = "lexicon")]
        lm: Option<PathBuf>,
        /// Source-to-target lexicon for adequacy.
        #[arg(long, requires = "lm")]
        lexicon: Option<PathBuf>,
        /// Precomputed Pharaoh links (from `align` or an external aligner).
        #[arg(long, conflicts_with = "align_lexicon")]
        alignments: Option<PathBuf>,
        /// MT-to-reference lexicon to align with.
        #[arg(long)]
        align_lexicon: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train the in-domain discriminator on record sources.
    TrainDiscriminator {
        /// Golden records (positives).
        #[arg(long, required = true, num_args = 1..)]
        golden: Vec<PathBuf>,
        /// Synthetic records (negatives are sampled from these).
        #[arg(long, required = true, num_args = 1..)]
        synthetic: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Keep records whose source the discriminator scores above theta.
    FilterIndomain {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Write two-column model input (`src [SEP] masked`, suggestion).
    EmitModelInput {
        #[arg(long, value_enum)]
        phase: Phase,
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Corpus BLEU of predicted suggestions against references.
    EvalBleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Record counts per origin and length histograms.
    Stats {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.overrides.resolve()?;
    match cli.command {
        Command::FitLengths { golden, fallback, output } => {
            stages::fit_lengths(&config, golden.as_deref(), fallback, &output)
        }
        Command::BuildGolden(args) => stages::build_masked(&config, &args, tsgen_core::Origin::Golden),
        Command::BuildPseudo(args) => stages::build_masked(&config, &args, tsgen_core::Origin::Pseudo),
        Command::TrainAligner { src, tgt, output } => stages::train_aligner(&config, &src, &tgt, &output),
        Command::Align { mt, reference, lexicon, output } => stages::align(&config, &mt, &reference, &lexicon, &output),
        Command::TrainLm { input, output } => stages::train_lm(&config, &input, &output),
        Command::ScoreQe { src, mt, lm, lexicon, output } => {
            stages::score_qe(&config, &src, &mt, &lm, &lexicon, &output)
        }
        Command::BuildQe { src, mt, reference, lengths, scores, lm, lexicon, alignments, align_lexicon, output } => {
            let scores = match (scores, lm, lexicon) {
                (Some(path), _, _) => stages::ScoreSource::File(path),
                (None, Some(lm), Some(lexicon)) => stages::ScoreSource::Models { lm, lexicon },
                _ => anyhow::bail!("build-qe needs --scores, or both --lm and --lexicon"),
            };
            let links = match (alignments, align_lexicon) {
                (Some(path), _) => stages::LinkSource::File(path),
                (None, Some(path)) => stages::LinkSource::Lexicon(path),
                _ => anyhow::bail!("build-qe needs --alignments or --align-lexicon"),
            };
            stages::build_qe(&config, &stages::QeInputs { src, mt, reference, lengths, scores, links }, &output)
        }
        Command::TrainDiscriminator { golden, synthetic, output } => {
            stages::train_discriminator(&config, &golden, &synthetic, &output)
        }
        Command::FilterIndomain { input, model, output } => stages::filter_indomain(&config, &input, &model, &output),
        Command::EmitModelInput { phase, input, output } => stages::emit_model_input(&config, phase, &input, &output),
        Command::EvalBleu { hyp, reference, json } => stages::eval_bleu(&config, &hyp, &reference, json.as_deref()),
        Command::Stats { input, output } => stages::stats(&config, &input, output.as_deref()),
    }
}
