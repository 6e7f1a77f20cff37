//! Algorithms for synthesizing translation-suggestion (TS) training data.
//!
//! A TS example pairs a source sentence with a translation in which one
//! contiguous span is replaced by `[MASK]`; the model learns to predict the
//! replacement. This crate builds such examples three ways:
//!
//! * masking sampled spans of golden references ([`span`], origin `golden`),
//! * the same masking over machine-translation output (origin `pseudo`),
//! * masking low-confidence MT spans and taking the aligned reference
//!   sub-segment as the suggestion ([`confidence`], [`align`], [`qe`]).
//!
//! It also carries the in-domain discriminator used to pick a pre-training
//! subset ([`domain`]) and corpus BLEU ([`bleu`]).
//!
//! The crate is `no_std` and only needs an allocator. File handling, model
//! persistence and the command-line driver live in the `tsgen` crate.

#![no_std]

extern crate alloc;

pub mod align;
pub mod bleu;
pub mod confidence;
pub mod domain;
pub mod lm;
pub mod qe;
pub mod record;
pub mod rng;
pub mod span;
pub mod token;
mod vocab;

pub use align::{AlignmentFilter, AlignmentLinks, Ibm1Trainer, LexiconTable};
pub use bleu::{corpus_bleu, BleuStats, DatasetStats};
pub use confidence::{score_words, select_low_confidence_span, ConfidenceVector, SpanSelection};
pub use domain::{DomainConfig, DomainModel};
pub use lm::{BidirectionalLm, NGramLm};
pub use qe::{build_qe_record, project_span, Projection, QeConfig, SkipCounts, SkipReason};
pub use record::{build_model_input, parse_record, serialize_record, Origin, RecordError, Span, TsRecord};
pub use span::{LengthDistribution, SpanMasker};
pub use token::{tokenize, ParallelPair, MASK, SEP};

pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
