//! On-disk formats for fitted models.
//!
//! * length distribution: JSON, `{"format", "version", "probs": [[len, p], ...]}`
//! * lexicon: TSV `source \t target \t p` sorted by source, then descending p
//! * language model: TSV count dump `direction \t n-gram \t count`
//! * domain model: little-endian binary with magic `TSDM`, the config echo,
//!   the bias and the non-zero weights
//!
//! Floats are written in shortest round-trip form, so reloading a model
//! reproduces it exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tsgen_core::{BidirectionalLm, DomainConfig, DomainModel, LengthDistribution, LexiconTable, NGramLm};

use crate::io::{self, IoError, LineReader};

pub const LEXICON_HEADER: &str = "#tsgen-lexicon\tv1";
pub const LM_HEADER: &str = "#tsgen-lm\tv1";
pub const DOMAIN_MAGIC: &[u8; 4] = b"TSDM";
pub const DOMAIN_VERSION: u32 = 1;
const LENGTHS_FORMAT: &str = "tsgen-lengths";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

fn malformed(path: &Path, line: usize, reason: impl ToString) -> PersistError {
    PersistError::Malformed { path: path.display().to_string(), line, reason: reason.to_string() }
}

fn invalid(path: &Path, reason: impl ToString) -> PersistError {
    PersistError::Invalid { path: path.display().to_string(), reason: reason.to_string() }
}

#[derive(Serialize, Deserialize)]
struct LengthsFile {
    format: String,
    version: u32,
    probs: Vec<(usize, f64)>,
}

pub fn write_lengths(path: &Path, dist: &LengthDistribution) -> Result<(), IoError> {
    let file = LengthsFile { format: LENGTHS_FORMAT.into(), version: 1, probs: dist.support().collect() };
    crate::manifest::write_json(path, &file)
}

pub fn read_lengths(path: &Path) -> Result<LengthDistribution, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let file: LengthsFile = serde_json::from_str(&text).map_err(|e| invalid(path, e))?;
    if file.format != LENGTHS_FORMAT || file.version != 1 {
        return Err(invalid(path, format!("unsupported format {} v{}", file.format, file.version)));
    }
    LengthDistribution::from_probs(file.probs).map_err(|e| invalid(path, e))
}

pub fn write_lexicon(path: &Path, lexicon: &LexiconTable) -> Result<(), IoError> {
    let rows = lexicon.entries().into_iter().map(|(s, t, p)| format!("{s}\t{t}\t{p}"));
    io::write_lines(path, std::iter::once(LEXICON_HEADER.to_string()).chain(rows))
}

pub fn read_lexicon(path: &Path) -> Result<LexiconTable, PersistError> {
    let mut reader = LineReader::open(path)?;
    if reader.next_line()?.as_deref() != Some(LEXICON_HEADER) {
        return Err(malformed(path, 1, "missing lexicon header"));
    }
    let mut entries = Vec::new();
    while let Some(line) = reader.next_line()? {
        let fields: Vec<&str> = line.split('\t').collect();
        let [s, t, p] = fields[..] else {
            return Err(malformed(path, reader.line(), "expected 3 tab-separated fields"));
        };
        let p: f64 = p.parse().map_err(|_| malformed(path, reader.line(), format!("bad probability {p:?}")))?;
        entries.push((s.to_string(), t.to_string(), p));
    }
    LexiconTable::from_entries(entries).map_err(|e| invalid(path, e))
}

pub fn write_lm(path: &Path, lm: &BidirectionalLm) -> Result<(), IoError> {
    let header = format!("{LM_HEADER}\torder={}\tdiscount={}", lm.forward.order(), lm.forward.discount());
    let mut lines = vec![header];
    for (direction, model) in [("forward", &lm.forward), ("backward", &lm.backward)] {
        for (gram, count) in model.counts() {
            lines.push(format!("{direction}\t{}\t{count}", gram.join(" ")));
        }
    }
    io::write_lines(path, lines)
}

pub fn read_lm(path: &Path) -> Result<BidirectionalLm, PersistError> {
    let mut reader = LineReader::open(path)?;
    let header = reader.next_line()?.unwrap_or_default();
    let parts: Vec<&str> = header.split('\t').collect();
    let parsed = match parts[..] {
        [a, b, order, discount] if format!("{a}\t{b}") == LM_HEADER => order
            .strip_prefix("order=")
            .and_then(|o| o.parse::<usize>().ok())
            .zip(discount.strip_prefix("discount=").and_then(|d| d.parse::<f64>().ok())),
        _ => None,
    };
    let Some((order, discount)) = parsed else {
        return Err(malformed(path, 1, "missing language model header"));
    };
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    while let Some(line) = reader.next_line()? {
        let fields: Vec<&str> = line.split('\t').collect();
        let [direction, gram, count] = fields[..] else {
            return Err(malformed(path, reader.line(), "expected 3 tab-separated fields"));
        };
        let count: u64 = count.parse().map_err(|_| malformed(path, reader.line(), format!("bad count {count:?}")))?;
        let gram: Vec<String> = gram.split(' ').map(str::to_string).collect();
        match direction {
            "forward" => forward.push((gram, count)),
            "backward" => backward.push((gram, count)),
            other => return Err(malformed(path, reader.line(), format!("unknown direction {other:?}"))),
        }
    }
    let forward = NGramLm::from_counts(order, discount, forward).map_err(|e| invalid(path, e))?;
    let backward = NGramLm::from_counts(order, discount, backward).map_err(|e| invalid(path, e))?;
    Ok(BidirectionalLm { forward, backward })
}

pub fn write_domain_model(path: &Path, model: &DomainModel) -> Result<(), IoError> {
    let c = model.config();
    let mut buf = Vec::new();
    buf.extend_from_slice(DOMAIN_MAGIC);
    for v in [DOMAIN_VERSION, c.hash_bits, c.min_n as u32, c.max_n as u32, c.epochs as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&c.learning_rate.to_le_bytes());
    buf.extend_from_slice(&c.seed.to_le_bytes());
    buf.extend_from_slice(&model.bias().to_le_bytes());
    let nonzero: Vec<(u32, f64)> =
        model.weights().iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i as u32, *w)).collect();
    buf.extend_from_slice(&(nonzero.len() as u64).to_le_bytes());
    for (i, w) in nonzero {
        buf.extend_from_slice(&i.to_le_bytes());
        buf.extend_from_slice(&w.to_le_bytes());
    }
    let mut out = io::create(path)?;
    let wrap = |source| IoError::Io { path: path.to_path_buf(), source };
    out.write_all(&buf).map_err(wrap)?;
    out.flush().map_err(wrap)
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let (head, rest) = self.0.split_first_chunk::<N>()?;
        self.0 = rest;
        Some(*head)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn read_domain_model(path: &Path) -> Result<DomainModel, PersistError> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let mut c = Cursor(&data);
    if c.take::<4>().as_ref() != Some(DOMAIN_MAGIC) {
        return Err(invalid(path, "not a domain model (bad magic)"));
    }
    let truncated = || invalid(path, "truncated domain model");
    let version = c.u32().ok_or_else(truncated)?;
    if version != DOMAIN_VERSION {
        return Err(invalid(path, format!("unsupported domain model version {version}")));
    }
    let hash_bits = c.u32().ok_or_else(truncated)?;
    let min_n = c.u32().ok_or_else(truncated)? as usize;
    let max_n = c.u32().ok_or_else(truncated)? as usize;
    let epochs = c.u32().ok_or_else(truncated)? as usize;
    let learning_rate = c.f64().ok_or_else(truncated)?;
    let seed = c.u64().ok_or_else(truncated)?;
    let bias = c.f64().ok_or_else(truncated)?;
    let config = DomainConfig { hash_bits, min_n, max_n, epochs, learning_rate, seed };
    if !(1..=30).contains(&hash_bits) {
        return Err(invalid(path, format!("hash_bits {hash_bits} out of range")));
    }
    let mut weights = vec![0.0; 1usize << hash_bits];
    let n = c.u64().ok_or_else(truncated)?;
    for _ in 0..n {
        let i = c.u32().ok_or_else(truncated)? as usize;
        let w = c.f64().ok_or_else(truncated)?;
        *weights.get_mut(i).ok_or_else(|| invalid(path, format!("weight index {i} out of range")))? = w;
    }
    if !c.0.is_empty() {
        return Err(invalid(path, "trailing bytes after weights"));
    }
    DomainModel::from_parts(config, weights, bias).map_err(|e| invalid(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsgen_core::domain::LabeledSentence;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn lengths_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.json");
        let dist = LengthDistribution::fit([1, 1, 2, 3, 3, 3, 7]).unwrap();
        write_lengths(&path, &dist).unwrap();
        assert_eq!(read_lengths(&path).unwrap(), dist);
        let fallback = LengthDistribution::fallback();
        write_lengths(&path, &fallback).unwrap();
        assert_eq!(read_lengths(&path).unwrap(), fallback);
    }

    #[test]
    fn lexicon_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        let pairs: Vec<_> = [("das Haus", "the house"), ("das Buch", "the book"), ("ein Buch", "a book")]
            .iter()
            .enumerate()
            .map(|(i, (s, t))| tsgen_core::ParallelPair::new(i as u64, toks(s), toks(t)).unwrap())
            .collect();
        let mut trainer = tsgen_core::Ibm1Trainer::new(&pairs).unwrap();
        for _ in 0..5 {
            trainer.step().unwrap();
        }
        let lex = trainer.finish(1e-6);
        write_lexicon(&path, &lex).unwrap();
        let back = read_lexicon(&path).unwrap();
        assert_eq!(back.entries(), lex.entries());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(LEXICON_HEADER));
    }

    #[test]
    fn lm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lm.tsv");
        let corpus = vec![toks("a b c a b"), toks("b c d"), toks("a b d d")];
        let lm = BidirectionalLm::train(&corpus, 3, 0.75).unwrap();
        write_lm(&path, &lm).unwrap();
        let back = read_lm(&path).unwrap();
        for s in [toks("a b c"), toks("d d zz b")] {
            assert_eq!(back.token_probs(&s), lm.token_probs(&s));
        }
    }

    #[test]
    fn domain_model_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let set = vec![
            LabeledSentence { text: "aaaa".into(), in_domain: true },
            LabeledSentence { text: "zzzz".into(), in_domain: false },
        ];
        let config = DomainConfig { hash_bits: 12, ..DomainConfig::default() };
        let (model, _) = DomainModel::train(&set, config).unwrap();
        write_domain_model(&path, &model).unwrap();
        assert_eq!(read_domain_model(&path).unwrap(), model);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_domain_model(&path).unwrap_err().to_string().contains("truncated"));
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_domain_model(&path).unwrap_err().to_string().contains("magic"));
    }
}
