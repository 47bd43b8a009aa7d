//! Parameter resolution: command-line flag, then config file, then default.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// `key=value` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key {key}", i + 1)));
        }
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Resolves parameters and records what was used, so that unknown config keys
/// can be rejected and the resolved values echoed.
#[derive(Debug, Default)]
pub struct Params {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<Vec<(String, String)>>,
}

impl Params {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self { file, ..Self::default() }
    }

    fn lookup<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("config key {key}={v}: {e}"))),
        }
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.resolved.borrow_mut().push((key.to_string(), v.to_string()));
        Ok(v)
    }

    pub fn require<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self
            .lookup(key, flag)?
            .ok_or_else(|| CliError::Config(format!("missing required parameter --{key}")))?;
        self.resolved.borrow_mut().push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(&self, key: &str, flag: Option<String>, default: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let raw: String = self.get(key, flag, default.to_string())?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| CliError::Config(format!("--{key} entry {s:?}: {e}"))))
            .collect()
    }

    /// Errors on any file key the command did not ask for.
    pub fn finish(&self) -> Result<Vec<(String, String)>, CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.file.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown config key(s): {}", unknown.join(", "))));
        }
        Ok(self.resolved.borrow().clone())
    }
}
