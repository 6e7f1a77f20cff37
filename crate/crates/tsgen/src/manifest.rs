//! Reproducibility manifests written next to every output.
//!
//! A manifest records the subcommand, the full resolved config and its
//! hash, and a SHA-256 digest of every input and output file. It carries no
//! timestamps or host details, so rerunning a stage with the same inputs
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::io::{self, IoError};

pub const TOOL: &str = "tsgen";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, IoError> {
        let data = std::fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counts: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

/// Collects what a stage read and wrote, then writes the manifest.
#[derive(Debug)]
pub struct Recorder {
    subcommand: String,
    config: Config,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    pub counts: BTreeMap<String, u64>,
    pub details: BTreeMap<String, Value>,
}

impl Recorder {
    pub fn new(subcommand: &str, config: &Config) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) {
        self.inputs.push(path.as_ref().to_path_buf());
    }

    pub fn output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().to_path_buf());
    }

    pub fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_string(), value);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("details are plain data"));
    }

    pub fn build(&self) -> Result<Manifest, IoError> {
        Ok(Manifest {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.clone(),
            config: self.config.entries(),
            config_hash: self.config.hash(),
            seed: self.config.seed,
            inputs: self.inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_, _>>()?,
            outputs: self.outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_, _>>()?,
            counts: self.counts.clone(),
            details: self.details.clone(),
        })
    }

    /// Writes `<primary>.manifest.json`, where `primary` is the first output.
    pub fn write(&self) -> Result<PathBuf, IoError> {
        let primary = self.outputs.first().expect("a stage writes at least one output");
        let path = sidecar(primary, "manifest.json");
        write_json(&path, &self.build()?)?;
        Ok(path)
    }
}

/// `<path>.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    io::write_lines(path, [text.trim_end_matches('\n')])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_deterministic_and_hashes_files() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        let output = dir.path().join("out.txt");
        std::fs::write(&input, "abc").unwrap();
        std::fs::write(&output, "").unwrap();
        let mut rec = Recorder::new("stats", &Config::default());
        rec.input(&input);
        rec.output(&output);
        rec.count("records", 3);
        let path = rec.write().unwrap();
        let first = std::fs::read(&path).unwrap();
        rec.write().unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        let m = rec.build().unwrap();
        assert_eq!(m.inputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(m.outputs[0].bytes, 0);
        assert!(path.ends_with("out.txt.manifest.json"));
    }
}
