//! Flat `key = value` experiment configuration.

use crate::error::{Error, Result};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

/// Raw configuration: one `key = value` per line, `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Validation(format!("line {}: expected `key = value`, got {line:?}", lineno + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Validation(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Validation(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
        }
        Ok(ExperimentConfig { entries })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Canonical text: sorted keys, one per line.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Name of the experiment to run.
    pub fn experiment(&self) -> Result<&str> {
        self.get("experiment").ok_or_else(|| Error::Validation("missing key `experiment`".into()))
    }
}

/// Typed reads with defaults. Every key read is recorded with its effective value, and
/// [`Reader::finish`] rejects keys that were never read.
pub(crate) struct Reader<'a> {
    cfg: &'a ExperimentConfig,
    used: RefCell<BTreeMap<String, String>>,
}

impl<'a> Reader<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Reader { cfg, used: RefCell::new(BTreeMap::new()) }
    }

    fn record(&self, key: &str, value: String) {
        self.used.borrow_mut().insert(key.to_string(), value);
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.cfg.get(key)
    }

    pub fn value<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match self.raw(key) {
            Some(s) => s.parse::<T>().map_err(|e| Error::Validation(format!("key `{key}`: {e}")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn required<T>(&self, key: &str, why: &str) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.raw(key) {
            Some(_) => {
                let v = self.raw(key).expect("present").parse::<T>().map_err(|e| Error::Validation(format!("key `{key}`: {e}")))?;
                self.record(key, v.to_string());
                Ok(v)
            }
            None => Err(Error::Validation(format!("missing key `{key}` ({why})"))),
        }
    }

    /// Value if present; absent keys are not echoed.
    pub fn optional<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.raw(key) {
            Some(_) => self.required(key, "").map(Some),
            None => Ok(None),
        }
    }

    pub fn list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        let v: Vec<T> = match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<T>().map_err(|e| Error::Validation(format!("key `{key}`: {e}"))))
                .collect::<Result<_>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(Error::Validation(format!("key `{key}` needs at least one value")));
        }
        self.record(key, v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    /// Integer bounded to `[lo, hi]`.
    pub fn bounded(&self, key: &str, default: usize, lo: usize, hi: usize) -> Result<usize> {
        let v: usize = self.value(key, default)?;
        if v < lo || v > hi {
            return Err(Error::Validation(format!("key `{key}` = {v} must lie in [{lo}, {hi}]")));
        }
        Ok(v)
    }

    /// Effective configuration, or an error naming the first unknown key.
    pub fn finish(self) -> Result<BTreeMap<String, String>> {
        let used = self.used.into_inner();
        if let Some(k) = self.cfg.entries.keys().find(|k| !used.contains_key(*k)) {
            return Err(Error::Validation(format!("unknown key `{k}` for this experiment")));
        }
        Ok(used)
    }
}
