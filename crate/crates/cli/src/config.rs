//! Flat `key = value` configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Result;

use crate::fail::{data_msg, usage, Exit, Fail};

/// Keys holding file or directory paths; relative values are resolved
/// against the directory of the config file.
const PATH_KEYS: &[&str] = &[
    "input",
    "train",
    "test",
    "gold",
    "pred",
    "model",
    "rules",
    "out",
    "embeddings",
    "synonyms",
    "entities",
    "masks",
];

const VALUE_KEYS: &[&str] = &[
    "tagset",
    "seed",
    "format",
    "test_fraction",
    "noise",
    "optimizer",
    "l2_sigma2",
    "max_iters",
    "smoothing_k",
    "averaging",
    "max_n",
    "techniques",
    "cosine_threshold",
    "translator",
    "shard_size",
    "method",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    paths: BTreeMap<String, PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| data_msg(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).map_err(|(line, msg)| {
            Fail {
                exit: Exit::Usage,
                message: format!("{}:{line}: {msg}", path.display()),
            }
            .into()
        })
    }

    fn parse(text: &str, base: &Path) -> Result<Self, (usize, String)> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or((i + 1, "expected key = value".to_string()))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err((i + 1, format!("empty value for {key:?}")));
            }
            if PATH_KEYS.contains(&key) {
                cfg.paths.insert(key.to_string(), base.join(value));
            } else if VALUE_KEYS.contains(&key) {
                cfg.values.insert(key.to_string(), value.to_string());
            } else {
                return Err((i + 1, format!("unknown key {key:?}")));
            }
        }
        Ok(cfg)
    }

    /// The flag if given, else the config entry.
    pub fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        flag.clone().or_else(|| self.paths.get(key).cloned())
    }

    pub fn require_path(&self, flag: &Option<PathBuf>, key: &str, name: &str) -> Result<PathBuf> {
        self.path(flag, key)
            .ok_or_else(|| usage(format!("missing {name} (flag or config key {key:?})")))
    }

    /// The flag if given, else the parsed config entry.
    pub fn value<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        debug_assert!(VALUE_KEYS.contains(&key));
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| usage(format!("config key {key:?}: {e}"))),
        }
    }

    pub fn value_or<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.value(flag, key)?.unwrap_or(default))
    }
}
