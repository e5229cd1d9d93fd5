//! Flag, config-file and environment resolution.
//!
//! Precedence: command-line flag, then a `key=value` line in the `--config`
//! file, then the environment (endpoints only), then the built-in default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

pub const BACKEND_ENV: &str = "DIALOGAUG_BACKEND_URL";
pub const SCORER_ENV: &str = "DIALOGAUG_SCORER_URL";

/// Keys accepted in a config file; the same names as the long flags.
pub const CONFIG_KEYS: &[&str] = &[
    "input",
    "format",
    "fraction",
    "seed",
    "style",
    "bs-slots",
    "no-future",
    "backend",
    "scorer",
    "filter-threshold",
    "num-beams",
    "num-return",
    "max-new-tokens",
    "concurrency",
    "out-corpus",
    "out-records",
];

/// A usage mistake that clap cannot catch (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may not repeat.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", n + 1);
        };
        let key = key.trim().trim_start_matches("--").to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", n + 1);
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("line {}: duplicate key {key:?}", n + 1);
        }
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct Resolver {
    config: BTreeMap<String, String>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Resolver::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config = parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
        Ok(Resolver { config })
    }

    #[cfg(test)]
    pub fn from_map(config: BTreeMap<String, String>) -> Self {
        Resolver { config }
    }

    /// Flag value, else the config value parsed as `T`.
    pub fn get<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| UsageError(format!("config key {key}: invalid value {raw:?}: {e}")).into()),
        }
    }

    pub fn get_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    /// A boolean switch: set on the command line, or `true`/`false` in the
    /// config.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.get::<bool>(None, key)?.unwrap_or(false))
    }

    /// Endpoint-style value with an environment fallback.
    pub fn endpoint(&self, flag: Option<String>, key: &str, env: &str, default: &str) -> Result<String> {
        if let Some(v) = self.get(flag, key)? {
            return Ok(v);
        }
        match std::env::var(env) {
            Ok(v) if !v.trim().is_empty() => Ok(v.trim().to_string()),
            _ => Ok(default.to_string()),
        }
    }

    /// Like [`Resolver::get`] but a missing value is a usage error.
    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(flag, key)?
            .ok_or_else(|| UsageError(format!("--{key} is required (flag or config key)")).into())
    }
}
