//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated. Command-line flags take precedence over file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "admission",
    "admit_static",
    "clicks",
    "confidence_threshold",
    "doc_dir",
    "doc_max_len",
    "doc_min_len",
    "docs",
    "f_s",
    "f_t",
    "f_ts",
    "format",
    "jobs",
    "lda_alpha",
    "lda_beta",
    "lda_iterations",
    "lda_k",
    "lda_max_doc_fraction",
    "lda_min_doc_freq",
    "map",
    "max_docs",
    "seed",
    "sizes",
    "split",
    "synthetic_burst_boost",
    "synthetic_burst_window",
    "synthetic_doc_len",
    "synthetic_events",
    "synthetic_noise",
    "synthetic_topics",
    "synthetic_vocab",
    "synthetic_zipf",
    "test",
    "topic_share",
    "topics",
    "train",
    "variants",
    "warmup",
    "x",
    "y",
    "z",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        cfg.path = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut unknown = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{line}`", i + 1);
            };
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                unknown.push(key);
                continue;
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("line {}: key `{key}` is set twice", i + 1);
            }
        }
        if !unknown.is_empty() {
            bail!("unknown config keys: {}", unknown.join(", "));
        }
        Ok(Config { path: None, values })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key).map(|v| parse_list(key, v)).transpose()
    }

    /// `flag`, else the config value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

fn parse_value<T>(key: &str, v: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    v.trim()
        .parse()
        .map_err(|e| anyhow::anyhow!("config key `{key}`: `{v}`: {e}"))
}

pub fn parse_list<T>(key: &str, v: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("config key `{key}` has an empty list");
    }
    Ok(items)
}
