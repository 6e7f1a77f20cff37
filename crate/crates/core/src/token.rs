//! Tokenization and the parallel-pair type.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

/// Placeholder that replaces the incorrect span in a masked translation.
pub const MASK: &str = "[MASK]";
/// Separator between the source and the masked translation in model inputs.
pub const SEP: &str = "[SEP]";
/// Distinguished empty source word of the lexical translation model.
pub const NULL: &str = "[NULL]";
/// Sentence-start padding of the n-gram models.
pub const BOS: &str = "[BOS]";
/// Sentence-end symbol of the n-gram models.
pub const EOS: &str = "[EOS]";

/// True for characters in any Unicode punctuation category (Pc, Pd, Ps, Pe,
/// Pi, Pf, Po).
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

const RESERVED: [&str; 5] = [MASK, SEP, NULL, BOS, EOS];

/// Splits on whitespace and emits every punctuation character as its own
/// token. Reserved literals such as `[MASK]` stay whole, so readers can
/// reject them. No language-specific rules are applied; Chinese and other
/// unsegmented scripts are expected to arrive pre-segmented.
///
/// ```
/// use tsgen_core::tokenize;
/// assert_eq!(tokenize("Hello, world!"), ["Hello", ",", "world", "!"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        let mut skip_to = 0;
        for (at, c) in chunk.char_indices() {
            if at < skip_to || !is_punctuation(c) {
                continue;
            }
            if start < at {
                tokens.push(chunk[start..at].to_string());
            }
            let rest = &chunk[at..];
            let end = match RESERVED.iter().find(|r| rest.starts_with(**r)) {
                Some(r) => at + r.len(),
                None => at + c.len_utf8(),
            };
            tokens.push(chunk[at..end].to_string());
            start = end;
            skip_to = end;
        }
        if start < chunk.len() {
            tokens.push(chunk[start..].to_string());
        }
    }
    tokens
}

/// A token may not be empty, contain whitespace, or spell one of the
/// reserved placeholder literals.
pub fn is_valid_token(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_whitespace) && !is_reserved(token)
}

pub fn is_reserved(token: &str) -> bool {
    RESERVED.contains(&token)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairError {
    #[error("pair {id}: {side} side is empty")]
    Empty { id: u64, side: &'static str },
    #[error("pair {id}: {side} side contains invalid token {token:?}")]
    InvalidToken { id: u64, side: &'static str, token: String },
}

/// One sentence pair of a parallel corpus. `tgt` is the reference or the MT
/// output depending on the corpus role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    /// Zero-based line number in the input files.
    pub id: u64,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
}

impl ParallelPair {
    pub fn new(id: u64, src: Vec<String>, tgt: Vec<String>) -> Result<Self, PairError> {
        for (side, tokens) in [("source", &src), ("target", &tgt)] {
            if tokens.is_empty() {
                return Err(PairError::Empty { id, side });
            }
            if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
                return Err(PairError::InvalidToken { id, side, token: bad.clone() });
            }
        }
        Ok(Self { id, src, tgt })
    }

    /// Tokenizes both lines. Returns `Ok(None)` when either side is empty
    /// after tokenization; such pairs are skipped by corpus readers.
    pub fn from_lines(id: u64, src: &str, tgt: &str) -> Result<Option<Self>, PairError> {
        let src = tokenize(src);
        let tgt = tokenize(tgt);
        if src.is_empty() || tgt.is_empty() {
            return Ok(None);
        }
        Self::new(id, src, tgt).map(Some)
    }
}
