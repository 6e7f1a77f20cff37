//! Records built from quality estimation: mask the least confident MT span
//! and take the aligned reference sub-segment as the suggestion.
//!
//! Stages run in a fixed order (score, select, align, project) and the
//! first stage that produces nothing decides the skip reason.

use alloc::string::String;
use alloc::vec::Vec;

use crate::align::{align, AlignmentLinks, LexiconTable};
use crate::confidence::{score_words, select_low_confidence_span, ConfidenceVector, SpanSelection};
use crate::lm::BidirectionalLm;
use crate::record::{Origin, Span, TsRecord};
use crate::rng;
use crate::span::{mask_span, LengthDistribution};

/// Suggestions longer than this multiple of the masked span are rejected.
pub const DEFAULT_MAX_HULL_RATIO: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkipReason {
    /// No supported span length fits the sentence.
    Unsampleable,
    /// Every window is above the confidence threshold.
    Confident,
    /// No token in the span is linked to the reference.
    Unaligned,
    /// A reference token inside the projected range is linked from outside
    /// the span.
    Contaminated,
    /// The projected range is too long relative to the span.
    Overlong,
}

impl SkipReason {
    pub const ALL: [SkipReason; 5] = [
        SkipReason::Unsampleable,
        SkipReason::Confident,
        SkipReason::Unaligned,
        SkipReason::Contaminated,
        SkipReason::Overlong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Unsampleable => "unsampleable",
            SkipReason::Confident => "confident",
            SkipReason::Unaligned => "unaligned",
            SkipReason::Contaminated => "contaminated",
            SkipReason::Overlong => "overlong",
        }
    }
}

/// Per-reason skip counters. Merging is associative, so shards can be
/// counted independently.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounts {
    pub emitted: u64,
    counts: [u64; 5],
}

impl SkipCounts {
    pub fn record(&mut self, outcome: &Result<TsRecord, SkipReason>) {
        match outcome {
            Ok(_) => self.emitted += 1,
            Err(reason) => self.counts[*reason as usize] += 1,
        }
    }

    pub fn get(&self, reason: SkipReason) -> u64 {
        self.counts[reason as usize]
    }

    pub fn skipped(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Records plus skips; equals the number of triples seen.
    pub fn total(&self) -> u64 {
        self.emitted + self.skipped()
    }

    pub fn merge(&mut self, other: &SkipCounts) {
        self.emitted += other.emitted;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Projected(Span),
    Unaligned,
    Contaminated,
}

/// Maps an MT span onto the reference: the hull of all reference positions
/// linked from inside the span. The projection is rejected when a reference
/// position inside the hull is linked from an MT position outside the span.
pub fn project_span(span: Span, links: &AlignmentLinks, ref_len: usize) -> Projection {
    let mut hull: Option<(usize, usize)> = None;
    for &(i, j) in links.links() {
        if span.contains(i) && j < ref_len {
            hull = Some(match hull {
                None => (j, j),
                Some((lo, hi)) => (lo.min(j), hi.max(j)),
            });
        }
    }
    let Some((lo, hi)) = hull else {
        return Projection::Unaligned;
    };
    let contaminated = links.links().iter().any(|&(i, j)| !span.contains(i) && lo <= j && j <= hi);
    if contaminated {
        Projection::Contaminated
    } else {
        Projection::Projected(Span::new(lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QeConfig {
    pub alpha: f64,
    pub tau: f64,
    pub max_hull_ratio: f64,
    pub seed: u64,
}

impl Default for QeConfig {
    fn default() -> Self {
        Self {
            alpha: crate::confidence::DEFAULT_ALPHA,
            tau: crate::confidence::DEFAULT_TAU,
            max_hull_ratio: DEFAULT_MAX_HULL_RATIO,
            seed: 0,
        }
    }
}

/// One (source, MT, reference) line triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QeTriple {
    pub id: u64,
    pub src: Vec<String>,
    pub mt: Vec<String>,
    pub reference: Vec<String>,
}

/// Where word confidences come from.
#[derive(Debug, Clone, Copy)]
pub enum Scores<'a> {
    Statistical { lm: &'a BidirectionalLm, lexicon: &'a LexiconTable },
    External(&'a ConfidenceVector),
}

/// Where MT-to-reference links come from.
#[derive(Debug, Clone, Copy)]
pub enum Links<'a> {
    Lexicon(&'a LexiconTable),
    External(&'a AlignmentLinks),
}

/// Runs score, select, align and project for one triple. The span-length
/// draw uses the stream of `triple.id` under `config.seed`.
pub fn build_qe_record(
    triple: &QeTriple,
    scores: Scores<'_>,
    links: Links<'_>,
    dist: &LengthDistribution,
    config: &QeConfig,
) -> Result<TsRecord, SkipReason> {
    let computed;
    let conf = match scores {
        Scores::Statistical { lm, lexicon } => {
            computed = score_words(&triple.src, &triple.mt, lm, lexicon, config.alpha);
            &computed
        }
        Scores::External(conf) => conf,
    };
    let mut rng = rng::for_item(config.seed, triple.id);
    let span = match select_low_confidence_span(conf, dist, config.tau, &mut rng) {
        SpanSelection::Selected(span) => span,
        SpanSelection::Confident => return Err(SkipReason::Confident),
        SpanSelection::Unsampleable => return Err(SkipReason::Unsampleable),
    };
    let aligned;
    let links = match links {
        Links::Lexicon(lexicon) => {
            aligned = align(&triple.mt, &triple.reference, lexicon);
            &aligned
        }
        Links::External(links) => links,
    };
    let target = match project_span(span, links, triple.reference.len()) {
        Projection::Projected(target) => target,
        Projection::Unaligned => return Err(SkipReason::Unaligned),
        Projection::Contaminated => return Err(SkipReason::Contaminated),
    };
    if target.len() as f64 > config.max_hull_ratio * span.len() as f64 {
        return Err(SkipReason::Overlong);
    }
    let (masked, _) = mask_span(&triple.mt, span.start, span.end).expect("selected span lies inside the MT sentence");
    let suggestion = triple.reference[target.start..=target.end].to_vec();
    Ok(TsRecord::new(triple.src.clone(), masked, suggestion, span, Origin::Qe)
        .expect("QE records are built from validated tokens"))
}
