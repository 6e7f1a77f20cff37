//! The TS record and its one-line, tab-separated text form.
//!
//! ```text
//! source \t masked-translation \t suggestion \t span.start \t span.end \t origin
//! ```
//!
//! Tokens inside a field are joined by single spaces. The masked translation
//! carries exactly one `[MASK]`, and its position is `span.start`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::token::{is_valid_token, MASK, SEP};

/// Which construction strategy produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Golden,
    Pseudo,
    Qe,
}

impl Origin {
    pub const ALL: [Origin; 3] = [Origin::Golden, Origin::Pseudo, Origin::Qe];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Golden => "golden",
            Origin::Pseudo => "pseudo",
            Origin::Qe => "qe",
        }
    }

    /// Golden and pseudo suggestions are cut from the translation itself, so
    /// splicing them back must reproduce it.
    pub fn requires_reconstruction(self) -> bool {
        !matches!(self, Origin::Qe)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "golden" => Ok(Origin::Golden),
            "pseudo" => Ok(Origin::Pseudo),
            "qe" => Ok(Origin::Qe),
            other => Err(RecordError::UnknownOrigin(other.to_string())),
        }
    }
}

/// Inclusive token range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[allow(clippy::len_without_is_empty)]
impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("expected 6 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("{0} field is empty")]
    EmptyField(&'static str),
    #[error("{0} field contains a tab")]
    TabInField(&'static str),
    #[error("{field} field contains invalid token {token:?}")]
    InvalidToken { field: &'static str, token: String },
    #[error("masked translation has no {MASK} placeholder")]
    MissingMask,
    #[error("masked translation has {0} {MASK} placeholders, expected exactly one")]
    MultipleMasks(usize),
    #[error("{field} is not a valid token index: {value:?}")]
    BadIndex { field: &'static str, value: String },
    #[error("unknown origin {0:?}")]
    UnknownOrigin(String),
    #[error("span ({start}, {end}) does not match the {MASK} at position {mask_at}")]
    SpanOutOfBounds { start: usize, end: usize, mask_at: usize },
    #[error("span covers {span_len} tokens but the suggestion has {suggestion_len}; the translation cannot be reconstructed")]
    Reconstruction { span_len: usize, suggestion_len: usize },
}

/// One TS training example.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TsRecord {
    pub src: Vec<String>,
    /// Translation with the span replaced by a single [`MASK`].
    pub masked: Vec<String>,
    pub suggestion: Vec<String>,
    /// Span in the unmasked translation.
    pub span: Span,
    pub origin: Origin,
}

impl TsRecord {
    pub fn new(
        src: Vec<String>,
        masked: Vec<String>,
        suggestion: Vec<String>,
        span: Span,
        origin: Origin,
    ) -> Result<Self, RecordError> {
        let record = Self { src, masked, suggestion, span, origin };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        check_tokens("source", &self.src, false)?;
        check_tokens("masked", &self.masked, true)?;
        check_tokens("suggestion", &self.suggestion, false)?;
        let mask_at = self.mask_position()?;
        let Span { start, end } = self.span;
        if start > end || mask_at != start {
            return Err(RecordError::SpanOutOfBounds { start, end, mask_at });
        }
        if self.origin.requires_reconstruction() && self.suggestion.len() != self.span.len() {
            return Err(RecordError::Reconstruction {
                span_len: self.span.len(),
                suggestion_len: self.suggestion.len(),
            });
        }
        Ok(())
    }

    fn mask_position(&self) -> Result<usize, RecordError> {
        let mut found = None;
        let mut count = 0;
        for (i, tok) in self.masked.iter().enumerate() {
            if tok == MASK {
                count += 1;
                found.get_or_insert(i);
            }
        }
        match (count, found) {
            (1, Some(i)) => Ok(i),
            (0, _) => Err(RecordError::MissingMask),
            (n, _) => Err(RecordError::MultipleMasks(n)),
        }
    }

    /// The masked translation with the suggestion spliced in at the mask.
    pub fn splice(&self) -> Vec<String> {
        crate::span::splice(&self.masked, &self.suggestion)
    }

    /// The original translation, for origins whose suggestion came from it.
    pub fn reconstruct(&self) -> Option<Vec<String>> {
        self.origin.requires_reconstruction().then(|| self.splice())
    }
}

fn check_tokens(field: &'static str, tokens: &[String], allow_mask: bool) -> Result<(), RecordError> {
    if tokens.is_empty() {
        return Err(RecordError::EmptyField(field));
    }
    for tok in tokens {
        if tok.contains('\t') {
            return Err(RecordError::TabInField(field));
        }
        if (allow_mask && tok == MASK) || is_valid_token(tok) {
            continue;
        }
        return Err(RecordError::InvalidToken { field, token: tok.clone() });
    }
    Ok(())
}

/// Renders a record as one tab-separated line without the trailing newline.
pub fn serialize_record(r: &TsRecord) -> Result<String, RecordError> {
    for (field, tokens) in [("source", &r.src), ("masked", &r.masked), ("suggestion", &r.suggestion)] {
        if tokens.iter().any(|t| t.contains('\t')) {
            return Err(RecordError::TabInField(field));
        }
    }
    r.validate()?;
    let mut line = String::new();
    line.push_str(&r.src.join(" "));
    line.push('\t');
    line.push_str(&r.masked.join(" "));
    line.push('\t');
    line.push_str(&r.suggestion.join(" "));
    line.push('\t');
    line.push_str(&r.span.start.to_string());
    line.push('\t');
    line.push_str(&r.span.end.to_string());
    line.push('\t');
    line.push_str(r.origin.as_str());
    Ok(line)
}

/// Inverse of [`serialize_record`]. Every record invariant is checked.
pub fn parse_record(line: &str) -> Result<TsRecord, RecordError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(RecordError::FieldCount(fields.len()));
    }
    let src = split_field("source", fields[0])?;
    let masked = split_field("masked", fields[1])?;
    let suggestion = split_field("suggestion", fields[2])?;
    let start = parse_index("span.start", fields[3])?;
    let end = parse_index("span.end", fields[4])?;
    let origin = fields[5].parse()?;
    TsRecord::new(src, masked, suggestion, Span::new(start, end), origin)
}

fn split_field(field: &'static str, text: &str) -> Result<Vec<String>, RecordError> {
    if text.is_empty() {
        return Err(RecordError::EmptyField(field));
    }
    // Splitting on single spaces keeps doubled or edge spaces visible as
    // empty tokens, which validation then rejects.
    Ok(text.split(' ').map(ToString::to_string).collect())
}

fn parse_index(field: &'static str, text: &str) -> Result<usize, RecordError> {
    let bad = || RecordError::BadIndex { field, value: text.to_string() };
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    text.parse().map_err(|_| bad())
}

/// Splices source and masked translation into the model input
/// (`src [SEP] masked`) and returns the suggestion as the output side.
pub fn build_model_input(r: &TsRecord) -> (Vec<&str>, Vec<&str>) {
    let mut input = Vec::with_capacity(r.src.len() + 1 + r.masked.len());
    input.extend(r.src.iter().map(String::as_str));
    input.push(SEP);
    input.extend(r.masked.iter().map(String::as_str));
    let output = r.suggestion.iter().map(String::as_str).collect();
    (input, output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(ToString::to_string).collect()
    }

    fn example() -> TsRecord {
        TsRecord::new(toks("a b"), toks("x [MASK] z"), toks("y"), Span::new(1, 1), Origin::Golden).unwrap()
    }

    #[test]
    fn serializes_to_the_documented_line() {
        assert_eq!(serialize_record(&example()).unwrap(), "a b\tx [MASK] z\ty\t1\t1\tgolden");
        assert_eq!(parse_record("a b\tx [MASK] z\ty\t1\t1\tgolden").unwrap(), example());
        assert_eq!(example().reconstruct().unwrap(), toks("x y z"));
    }

    #[test]
    fn qe_records_may_change_length() {
        let r = TsRecord::new(toks("s"), toks("[MASK] c"), toks("p q r"), Span::new(0, 1), Origin::Qe).unwrap();
        let line = serialize_record(&r).unwrap();
        assert_eq!(line, "s\t[MASK] c\tp q r\t0\t1\tqe");
        assert_eq!(parse_record(&line).unwrap(), r);
        assert_eq!(r.reconstruct(), None);
    }

    #[test]
    fn tab_inside_a_token_is_rejected() {
        let mut r = example();
        r.suggestion = vec!["y\tw".into()];
        assert_eq!(serialize_record(&r), Err(RecordError::TabInField("suggestion")));
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(parse_record("a\tx [MASK]\ty\t1\t1"), Err(RecordError::FieldCount(5)));
        assert_eq!(parse_record("a b\tx y z\ty\t1\t1\tgolden"), Err(RecordError::MissingMask));
        assert_eq!(parse_record("a\t[MASK] [MASK]\ty\t0\t0\tgolden"), Err(RecordError::MultipleMasks(2)));
        assert_eq!(
            parse_record("a b\tx [MASK] z\ty w\t1\t1\tgolden"),
            Err(RecordError::Reconstruction { span_len: 1, suggestion_len: 2 })
        );
        assert!(matches!(
            parse_record("a\tx [MASK]\ty\t0\t0\tgolden"),
            Err(RecordError::SpanOutOfBounds { mask_at: 1, .. })
        ));
        assert!(matches!(parse_record("a\t[MASK]\ty\t-1\t0\tqe"), Err(RecordError::BadIndex { .. })));
        assert_eq!(parse_record("a\t[MASK]\ty\t0\t0\tgold"), Err(RecordError::UnknownOrigin("gold".into())));
    }

    #[test]
    fn model_input_splices_with_one_separator() {
        let r = TsRecord::new(toks("a"), toks("[MASK]"), toks("y"), Span::new(0, 0), Origin::Golden).unwrap();
        assert_eq!(build_model_input(&r), (vec!["a", SEP, MASK], vec!["y"]));
        let r = TsRecord::new(toks("a b"), toks("p [MASK]"), toks("y z"), Span::new(1, 2), Origin::Pseudo).unwrap();
        let (input, output) = build_model_input(&r);
        assert_eq!(output, vec!["y", "z"]);
        assert_eq!(input.iter().filter(|t| **t == SEP).count(), 1);
    }
}
