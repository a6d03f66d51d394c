//! Run configuration: built-in defaults, then an optional JSON file, then
//! the flags that were actually given.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use psym_core::formats;

/// Bad flags, config files or argument combinations (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl fmt::Display) -> anyhow::Error {
    UsageError(msg.to_string()).into()
}

/// Seed used when neither the flag nor the config file sets one.
pub fn default_seed() -> anyhow::Result<u64> {
    match std::env::var("PSYM_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| usage(format!("PSYM_SEED must be a non-negative integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        base.insert(k, v);
    }
}

fn as_object(value: Value, what: &str) -> anyhow::Result<Map<String, Value>> {
    match value {
        Value::Object(map) => Ok(map),
        other => Err(usage(format!("{what} must be a JSON object, got {other}"))),
    }
}

/// `defaults` ⊕ config file ⊕ non-null `flags`, parsed into `T`.
pub fn resolve<T: DeserializeOwned>(defaults: Value, file: Option<&Path>, flags: &impl Serialize) -> anyhow::Result<T> {
    let mut merged = as_object(defaults, "defaults")?;
    if let Some(path) = file {
        let text = formats::read_text(path).map_err(usage)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        overlay(&mut merged, as_object(value, "config file")?);
    }
    let flags = as_object(serde_json::to_value(flags)?, "flags")?;
    overlay(&mut merged, flags.into_iter().filter(|(_, v)| !v.is_null()).collect());
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("configuration: {e}")))
}

/// `out.csv` → `out.config.json`.
pub fn config_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

/// Parses `lo:hi`.
pub fn parse_interval(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([parse(lo)?, parse(hi)?])
}
