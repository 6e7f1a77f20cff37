//! Line-oriented corpus reading with line-numbered errors.
//!
//! Files are UTF-8, one item per line, LF endings (a trailing CR is
//! stripped). Aligned files are read in lockstep and must have the same
//! number of lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use tsgen_core::record::{parse_record, RecordError};
use tsgen_core::token::PairError;
use tsgen_core::{tokenize, ParallelPair, TsRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: not valid UTF-8")]
    Utf8 { path: PathBuf, line: usize },
    #[error("line count mismatch: {}", describe_counts(.files))]
    LineCountMismatch { files: Vec<(PathBuf, usize)> },
    #[error("{path}:{line}: {source}")]
    Record { path: PathBuf, line: usize, source: RecordError },
    #[error("{path}:{line}: {source}")]
    Pair { path: PathBuf, line: usize, source: PairError },
}

fn describe_counts(files: &[(PathBuf, usize)]) -> String {
    let parts: Vec<String> = files.iter().map(|(p, n)| format!("{} has {n} lines", p.display())).collect();
    parts.join(", ")
}

/// Lines of one file, numbered from 1.
pub struct LineReader {
    path: PathBuf,
    inner: BufReader<File>,
    line: usize,
    buf: Vec<u8>,
}

impl LineReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| IoError::Io { path: path.clone(), source })?;
        Ok(Self { path, inner: BufReader::new(file), line: 0, buf: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines read so far.
    pub fn line(&self) -> usize {
        self.line
    }

    pub fn next_line(&mut self) -> Result<Option<String>, IoError> {
        self.buf.clear();
        let n = self
            .inner
            .read_until(b'\n', &mut self.buf)
            .map_err(|source| IoError::Io { path: self.path.clone(), source })?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        if self.buf.last() == Some(&b'\n') {
            self.buf.pop();
        }
        if self.buf.last() == Some(&b'\r') {
            self.buf.pop();
        }
        let text =
            std::str::from_utf8(&self.buf).map_err(|_| IoError::Utf8 { path: self.path.clone(), line: self.line })?;
        Ok(Some(text.to_string()))
    }

    fn count_rest(&mut self) -> Result<usize, IoError> {
        while self.next_line()?.is_some() {}
        Ok(self.line)
    }
}

impl Iterator for LineReader {
    type Item = Result<String, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_line().transpose()
    }
}

/// Reads several aligned files together, one row of lines at a time.
pub struct Lockstep {
    readers: Vec<LineReader>,
    done: bool,
}

impl Lockstep {
    pub fn open<P: AsRef<Path>>(paths: &[P]) -> Result<Self, IoError> {
        let readers = paths.iter().map(LineReader::open).collect::<Result<_, _>>()?;
        Ok(Self { readers, done: false })
    }

    /// 1-based number of the last row returned.
    pub fn line(&self) -> usize {
        self.readers[0].line()
    }

    pub fn path(&self, k: usize) -> &Path {
        self.readers[k].path()
    }

    pub fn next_row(&mut self) -> Result<Option<Vec<String>>, IoError> {
        if self.done {
            return Ok(None);
        }
        let mut row = Vec::with_capacity(self.readers.len());
        for r in &mut self.readers {
            row.push(r.next_line()?);
        }
        if row.iter().all(Option::is_some) {
            return Ok(Some(row.into_iter().flatten().collect()));
        }
        self.done = true;
        if row.iter().all(Option::is_none) {
            return Ok(None);
        }
        let mut files = Vec::new();
        for r in &mut self.readers {
            let n = r.count_rest()?;
            files.push((r.path().to_path_buf(), n));
        }
        Err(IoError::LineCountMismatch { files })
    }
}

impl Iterator for Lockstep {
    type Item = Result<Vec<String>, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_row().transpose()
    }
}

/// Tokenized parallel pairs in file order. The id of a pair is its 0-based
/// line number, so pairs stay matched to other files aligned by line.
/// Lines where either side tokenizes to nothing are skipped and counted.
pub struct ParallelReader {
    lines: Lockstep,
    skipped: u64,
}

impl ParallelReader {
    pub fn open(src: impl AsRef<Path>, tgt: impl AsRef<Path>) -> Result<Self, IoError> {
        Ok(Self { lines: Lockstep::open(&[src.as_ref(), tgt.as_ref()])?, skipped: 0 })
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl Iterator for ParallelReader {
    type Item = Result<ParallelPair, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let row = match self.lines.next_row() {
                Ok(Some(row)) => row,
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            };
            let line = self.lines.line();
            match ParallelPair::from_lines(line as u64 - 1, &row[0], &row[1]) {
                Ok(Some(pair)) => return Some(Ok(pair)),
                Ok(None) => self.skipped += 1,
                Err(source) => {
                    let side = match &source {
                        PairError::InvalidToken { side, .. } | PairError::Empty { side, .. } => *side,
                    };
                    let path = self.lines.path(usize::from(side != "source")).to_path_buf();
                    return Some(Err(IoError::Pair { path, line, source }));
                }
            }
        }
    }
}

/// Every record of a TS record file.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TsRecord>, IoError> {
    let mut reader = LineReader::open(path)?;
    let mut out = Vec::new();
    while let Some(line) = reader.next_line()? {
        let record = parse_record(&line).map_err(|source| IoError::Record {
            path: reader.path().to_path_buf(),
            line: reader.line(),
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Tokenizes every line of a plain text file.
pub fn read_tokenized(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>, IoError> {
    LineReader::open(path)?.map(|line| line.map(|l| tokenize(&l))).collect()
}

pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>, IoError> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Writes lines with LF endings.
pub fn write_lines<I, S>(path: impl AsRef<Path>, lines: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    let wrap = |source| IoError::Io { path: path.to_path_buf(), source };
    let mut out = create(path)?;
    for line in lines {
        out.write_all(line.as_ref().as_bytes()).map_err(wrap)?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}
