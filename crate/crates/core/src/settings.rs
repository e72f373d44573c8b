//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. A `corpus` tag sets
//! corpus-specific defaults for `m` and `k` before any other key is applied,
//! so explicit values always win regardless of their position.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use crate::model::ModelConfig;
use crate::oracle::OracleConfig;
use crate::rouge::{LcsMode, RougeConfig};
use crate::train::{Sampling, TrainConfig, TrainMode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SettingsError {
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("line {0}: expected key = value")]
    Syntax(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusTag {
    Cnn,
    DailyMail,
}

impl CorpusTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusTag::Cnn => "cnn",
            CorpusTag::DailyMail => "dailymail",
        }
    }

    /// Summary length and candidate count used for this corpus.
    pub fn defaults(self) -> (usize, usize) {
        match self {
            CorpusTag::Cnn => (3, 5),
            CorpusTag::DailyMail => (4, 15),
        }
    }
}

impl FromStr for CorpusTag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "cnn" => Ok(CorpusTag::Cnn),
            "dailymail" | "dm" => Ok(CorpusTag::DailyMail),
            _ => Err(()),
        }
    }
}

/// Every key accepted by [`Settings::set`], in snapshot order.
pub const KEYS: &[&str] = &[
    "corpus",
    "m",
    "p",
    "k",
    "tau",
    "stemming",
    "normalize",
    "lcs",
    "min_freq",
    "embedding_dim",
    "kernel_widths",
    "channels",
    "lstm_size",
    "max_sent_len",
    "max_doc_len",
    "init_scale",
    "forget_bias",
    "seed",
    "mode",
    "batch_size",
    "epochs",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "sampling",
    "baseline",
    "clip_norm",
    "warm_start_epochs",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub corpus: Option<CorpusTag>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub oracle: OracleConfig,
    pub rouge: RougeConfig,
    pub min_freq: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            corpus: None,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            oracle: OracleConfig::default(),
            rouge: RougeConfig::default(),
            min_freq: 1,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, SettingsError> {
    value.parse().map_err(|_| SettingsError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, SettingsError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(SettingsError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

/// `key = value` pairs of a settings file, in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, SettingsError> {
    let mut pairs = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(SettingsError::Syntax(number + 1))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(SettingsError::Syntax(number + 1));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

impl Settings {
    /// Settings from a file's text, applied over the defaults.
    pub fn from_text(text: &str) -> Result<Self, SettingsError> {
        let mut settings = Settings::default();
        settings.apply(&parse_pairs(text)?)?;
        Ok(settings)
    }

    /// Applies `pairs`, a `corpus` entry first.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<(), SettingsError> {
        for (key, value) in pairs.iter().filter(|(k, _)| k == "corpus") {
            self.set(key, value)?;
        }
        for (key, value) in pairs.iter().filter(|(k, _)| k != "corpus") {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SettingsError> {
        let v = value;
        match key {
            "corpus" => {
                let tag: CorpusTag = parse_value(key, v)?;
                let (m, k) = tag.defaults();
                self.corpus = Some(tag);
                self.oracle.m = m;
                self.model.m_select = m;
                self.oracle.k = k;
            }
            "m" => {
                self.oracle.m = parse_value(key, v)?;
                self.model.m_select = self.oracle.m;
            }
            "p" => self.oracle.p = parse_value(key, v)?,
            "k" => self.oracle.k = parse_value(key, v)?,
            "tau" => self.oracle.tau = parse_value(key, v)?,
            "stemming" => self.rouge.stemming = parse_bool(key, v)?,
            "normalize" => self.rouge.normalize = parse_bool(key, v)?,
            "lcs" => {
                self.rouge.lcs = match v {
                    "union" => LcsMode::Union,
                    "concatenated" => LcsMode::Concatenated,
                    _ => return Err(bad(key, v)),
                }
            }
            "min_freq" => self.min_freq = parse_value(key, v)?,
            "embedding_dim" => self.model.embedding_dim = parse_value(key, v)?,
            "kernel_widths" => {
                self.model.kernel_widths = v
                    .split(',')
                    .map(|w| parse_value(key, w.trim()))
                    .collect::<Result<_, _>>()?
            }
            "channels" => self.model.channels_per_kernel = parse_value(key, v)?,
            "lstm_size" => self.model.lstm_size = parse_value(key, v)?,
            "max_sent_len" => self.model.max_sent_len = parse_value(key, v)?,
            "max_doc_len" => self.model.max_doc_len = parse_value(key, v)?,
            "init_scale" => self.model.init_scale = parse_value(key, v)?,
            "forget_bias" => self.model.forget_bias = parse_value(key, v)?,
            "seed" => {
                self.model.seed = parse_value(key, v)?;
                self.train.seed = self.model.seed;
            }
            "mode" => {
                self.train.mode = TrainMode::parse(v).ok_or_else(|| bad(key, v))?;
            }
            "batch_size" => self.train.batch_size = parse_value(key, v)?,
            "epochs" => self.train.epochs = parse_value(key, v)?,
            "lr" => self.train.adam.lr = parse_value(key, v)?,
            "beta1" => self.train.adam.beta1 = parse_value(key, v)?,
            "beta2" => self.train.adam.beta2 = parse_value(key, v)?,
            "eps" => self.train.adam.eps = parse_value(key, v)?,
            "sampling" => {
                self.train.sampling = Sampling::parse(v).ok_or_else(|| bad(key, v))?;
            }
            "baseline" => self.train.baseline = parse_bool(key, v)?,
            "clip_norm" => {
                self.train.clip_norm = match v {
                    "none" | "off" => None,
                    _ => Some(parse_value(key, v)?),
                }
            }
            "warm_start_epochs" => self.train.warm_start_epochs = parse_value(key, v)?,
            _ => return Err(SettingsError::UnknownKey(key.into())),
        }
        self.train.rouge = self.rouge;
        Ok(())
    }

    /// The value of `key` as written by [`Settings::to_text`].
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "corpus" => self.corpus.map_or("none", CorpusTag::as_str).to_string(),
            "m" => self.oracle.m.to_string(),
            "p" => self.oracle.p.to_string(),
            "k" => self.oracle.k.to_string(),
            "tau" => self.oracle.tau.to_string(),
            "stemming" => self.rouge.stemming.to_string(),
            "normalize" => self.rouge.normalize.to_string(),
            "lcs" => match self.rouge.lcs {
                LcsMode::Union => "union".into(),
                LcsMode::Concatenated => "concatenated".into(),
            },
            "min_freq" => self.min_freq.to_string(),
            "embedding_dim" => self.model.embedding_dim.to_string(),
            "kernel_widths" => {
                let widths: Vec<String> =
                    self.model.kernel_widths.iter().map(|w| w.to_string()).collect();
                widths.join(",")
            }
            "channels" => self.model.channels_per_kernel.to_string(),
            "lstm_size" => self.model.lstm_size.to_string(),
            "max_sent_len" => self.model.max_sent_len.to_string(),
            "max_doc_len" => self.model.max_doc_len.to_string(),
            "init_scale" => self.model.init_scale.to_string(),
            "forget_bias" => self.model.forget_bias.to_string(),
            "seed" => self.train.seed.to_string(),
            "mode" => self.train.mode.as_str().into(),
            "batch_size" => self.train.batch_size.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "lr" => self.train.adam.lr.to_string(),
            "beta1" => self.train.adam.beta1.to_string(),
            "beta2" => self.train.adam.beta2.to_string(),
            "eps" => self.train.adam.eps.to_string(),
            "sampling" => self.train.sampling.as_str().into(),
            "baseline" => self.train.baseline.to_string(),
            "clip_norm" => self.train.clip_norm.map_or("none".into(), |c| c.to_string()),
            "warm_start_epochs" => self.train.warm_start_epochs.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Every key with its effective value; `from_text` of the result
    /// reproduces these settings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if *key == "corpus" && self.corpus.is_none() {
                continue;
            }
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }
}

fn bad(key: &str, value: &str) -> SettingsError {
    SettingsError::BadValue {
        key: key.into(),
        value: value.into(),
    }
}
