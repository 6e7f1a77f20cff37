//! Run configuration: a flat `key = value` file whose keys can all be
//! overridden from the command line.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! unparsable values are errors. Optional values accept `none`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use sha2::{Digest, Sha256};
use thiserror::Error;
use tsgen_core::align::{AlignmentFilter, DEFAULT_ITERATIONS, DEFAULT_PRUNE, MAX_ALIGN_LEN, MIN_ALIGN_LEN};
use tsgen_core::confidence::{DEFAULT_ALPHA, DEFAULT_TAU};
use tsgen_core::domain::DEFAULT_THETA;
use tsgen_core::lm::{DEFAULT_DISCOUNT, DEFAULT_ORDER};
use tsgen_core::qe::{QeConfig, DEFAULT_MAX_HULL_RATIO};
use tsgen_core::DomainConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: unknown config key {key:?}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value {value:?} for {key}: {reason}")]
    InvalidValue { origin: String, key: String, value: String, reason: String },
    #[error("{origin}: expected `key = value`, found {line:?}")]
    Syntax { origin: String, line: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub alpha: f64,
    pub tau: f64,
    pub theta: f64,
    pub target_fraction: Option<f64>,
    pub lm_order: usize,
    pub lm_discount: f64,
    pub iterations: usize,
    pub align_min_len: usize,
    pub align_max_len: usize,
    pub align_cap: Option<usize>,
    pub prune_threshold: f64,
    pub max_hull_ratio: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hash_bits: u32,
    pub smooth: bool,
    pub chunk_size: usize,
}

impl Default for Config {
    fn default() -> Self {
        let domain = DomainConfig::default();
        Self {
            seed: 0,
            threads: 1,
            alpha: DEFAULT_ALPHA,
            tau: DEFAULT_TAU,
            theta: DEFAULT_THETA,
            target_fraction: None,
            lm_order: DEFAULT_ORDER,
            lm_discount: DEFAULT_DISCOUNT,
            iterations: DEFAULT_ITERATIONS,
            align_min_len: MIN_ALIGN_LEN,
            align_max_len: MAX_ALIGN_LEN,
            align_cap: None,
            prune_threshold: DEFAULT_PRUNE,
            max_hull_ratio: DEFAULT_MAX_HULL_RATIO,
            epochs: domain.epochs,
            learning_rate: domain.learning_rate,
            hash_bits: domain.hash_bits,
            smooth: false,
            chunk_size: 10_000,
        }
    }
}

pub const KEYS: [&str; 19] = [
    "seed",
    "threads",
    "alpha",
    "tau",
    "theta",
    "target_fraction",
    "lm_order",
    "lm_discount",
    "iterations",
    "align_min_len",
    "align_max_len",
    "align_cap",
    "prune_threshold",
    "max_hull_ratio",
    "epochs",
    "learning_rate",
    "hash_bits",
    "smooth",
    "chunk_size",
];

fn parse<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| e.to_string())
}

fn optional<T: FromStr>(v: &str) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    if v == "none" {
        Ok(None)
    } else {
        parse(v).map(Some)
    }
}

fn unit(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn positive<T: FromStr + PartialOrd + Default>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let x: T = parse(v)?;
    if x > T::default() {
        Ok(x)
    } else {
        Err("must be positive".into())
    }
}

fn show<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse_text(&text, &path.display().to_string())
    }

    pub fn parse_text(text: &str, name: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{name}:{}", n + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { origin, line: line.to_string() });
            };
            config.set(key.trim(), value.trim(), &origin)?;
        }
        Ok(config)
    }

    /// Sets one key from its text form. `origin` names the source in errors.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let result = match key {
            "seed" => parse(value).map(|v| self.seed = v),
            "threads" => positive(value).map(|v| self.threads = v),
            "alpha" => unit(value).map(|v| self.alpha = v),
            "tau" => unit(value).map(|v| self.tau = v),
            "theta" => unit(value).map(|v| self.theta = v),
            "target_fraction" => match optional::<f64>(value) {
                Ok(Some(v)) if !(0.0..=1.0).contains(&v) => Err("must lie in [0, 1]".into()),
                other => other.map(|v| self.target_fraction = v),
            },
            "lm_order" => parse(value).and_then(|v: usize| {
                if (1..=tsgen_core::lm::MAX_ORDER).contains(&v) {
                    self.lm_order = v;
                    Ok(())
                } else {
                    Err(format!("must lie in 1..={}", tsgen_core::lm::MAX_ORDER))
                }
            }),
            "lm_discount" => parse(value).and_then(|v: f64| {
                if v > 0.0 && v < 1.0 {
                    self.lm_discount = v;
                    Ok(())
                } else {
                    Err("must lie strictly between 0 and 1".into())
                }
            }),
            "iterations" => positive(value).map(|v| self.iterations = v),
            "align_min_len" => parse(value).map(|v| self.align_min_len = v),
            "align_max_len" => parse(value).map(|v| self.align_max_len = v),
            "align_cap" => optional(value).map(|v| self.align_cap = v),
            "prune_threshold" => unit(value).map(|v| self.prune_threshold = v),
            "max_hull_ratio" => positive(value).map(|v| self.max_hull_ratio = v),
            "epochs" => positive(value).map(|v| self.epochs = v),
            "learning_rate" => positive(value).map(|v| self.learning_rate = v),
            "hash_bits" => parse(value).and_then(|v: u32| {
                if (1..=30).contains(&v) {
                    self.hash_bits = v;
                    Ok(())
                } else {
                    Err("must lie in 1..=30".into())
                }
            }),
            "smooth" => parse(value).map(|v| self.smooth = v),
            "chunk_size" => positive(value).map(|v| self.chunk_size = v),
            _ => return Err(ConfigError::UnknownKey { origin: origin.to_string(), key: key.to_string() }),
        };
        result.map_err(|reason| ConfigError::InvalidValue {
            origin: origin.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            reason,
        })
    }

    /// Every key with its current value, sorted by key.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let values = [
            self.seed.to_string(),
            self.threads.to_string(),
            self.alpha.to_string(),
            self.tau.to_string(),
            self.theta.to_string(),
            show(&self.target_fraction),
            self.lm_order.to_string(),
            self.lm_discount.to_string(),
            self.iterations.to_string(),
            self.align_min_len.to_string(),
            self.align_max_len.to_string(),
            show(&self.align_cap),
            self.prune_threshold.to_string(),
            self.max_hull_ratio.to_string(),
            self.epochs.to_string(),
            self.learning_rate.to_string(),
            self.hash_bits.to_string(),
            self.smooth.to_string(),
            self.chunk_size.to_string(),
        ];
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    /// The canonical `key = value` text, parseable by [`Config::parse_text`].
    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`Config::to_text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn alignment_filter(&self) -> AlignmentFilter {
        AlignmentFilter {
            min_len: self.align_min_len,
            max_len: self.align_max_len,
            cap: self.align_cap,
            seed: self.seed,
        }
    }

    pub fn qe(&self) -> QeConfig {
        QeConfig { alpha: self.alpha, tau: self.tau, max_hull_ratio: self.max_hull_ratio, seed: self.seed }
    }

    pub fn domain(&self) -> DomainConfig {
        DomainConfig {
            hash_bits: self.hash_bits,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..DomainConfig::default()
        }
    }
}

/// Command-line overrides, one flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub threads: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub tau: Option<String>,
    #[arg(long, global = true)]
    pub theta: Option<String>,
    #[arg(long, global = true)]
    pub target_fraction: Option<String>,
    #[arg(long, global = true)]
    pub lm_order: Option<String>,
    #[arg(long, global = true)]
    pub lm_discount: Option<String>,
    #[arg(long, global = true)]
    pub iterations: Option<String>,
    #[arg(long, global = true)]
    pub align_min_len: Option<String>,
    #[arg(long, global = true)]
    pub align_max_len: Option<String>,
    #[arg(long, global = true)]
    pub align_cap: Option<String>,
    #[arg(long, global = true)]
    pub prune_threshold: Option<String>,
    #[arg(long, global = true)]
    pub max_hull_ratio: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<String>,
    #[arg(long, global = true)]
    pub learning_rate: Option<String>,
    #[arg(long, global = true)]
    pub hash_bits: Option<String>,
    #[arg(long, global = true)]
    pub smooth: Option<String>,
    #[arg(long, global = true)]
    pub chunk_size: Option<String>,
}

impl Overrides {
    fn values(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("alpha", &self.alpha),
            ("tau", &self.tau),
            ("theta", &self.theta),
            ("target_fraction", &self.target_fraction),
            ("lm_order", &self.lm_order),
            ("lm_discount", &self.lm_discount),
            ("iterations", &self.iterations),
            ("align_min_len", &self.align_min_len),
            ("align_max_len", &self.align_max_len),
            ("align_cap", &self.align_cap),
            ("prune_threshold", &self.prune_threshold),
            ("max_hull_ratio", &self.max_hull_ratio),
            ("epochs", &self.epochs),
            ("learning_rate", &self.learning_rate),
            ("hash_bits", &self.hash_bits),
            ("smooth", &self.smooth),
            ("chunk_size", &self.chunk_size),
        ]
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<Config, ConfigError> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        for (key, value) in self.values() {
            if let Some(v) = value {
                config.set(key, v, &format!("--{}", key.replace('_', "-")))?;
            }
        }
        Ok(config)
    }
}
