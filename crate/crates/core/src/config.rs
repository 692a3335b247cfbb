//! Flat `key = value` configuration files.
//!
//! ```text
//! # Monte Carlo run
//! n = 40
//! code = bernoulli
//! C = 1          # connection factor
//! ```
//!
//! Keys are case-sensitive and must be unique. Unknown keys are an error,
//! reported by [`KvConfig::finish`] once a consumer has read what it needs.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key = value, got {line:?}") })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Parse { line: idx + 1, msg: "empty key".into() });
            }
            if entries.insert(k.to_owned(), v.to_owned()).is_some() {
                return Err(Error::Parse { line: idx + 1, msg: format!("duplicate key {k:?}") });
            }
        }
        Ok(Self { entries, used: RefCell::default() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_owned());
        Some(v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }

    /// Fails if any key was never read.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<_> = self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Canonical text form: sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_usage() {
        let cfg = KvConfig::parse("# header\nn = 9\n\nseed=3 # trailing\nname = x\n").unwrap();
        assert_eq!(cfg.require::<usize>("n").unwrap(), 9);
        assert_eq!(cfg.get_or::<u64>("seed", 0).unwrap(), 3);
        assert_eq!(cfg.get_or::<f64>("missing", 1.5).unwrap(), 1.5);
        assert!(cfg.finish().is_err());
        assert_eq!(cfg.get_str("name"), Some("x"));
        assert!(cfg.finish().is_ok());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(KvConfig::parse("n 9").is_err());
        assert!(KvConfig::parse("= 9").is_err());
        assert!(KvConfig::parse("n = 1\nn = 2").is_err());
        let cfg = KvConfig::parse("n = nine").unwrap();
        assert!(cfg.require::<usize>("n").is_err());
        assert!(cfg.require::<usize>("m").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = KvConfig::parse("b = 2\na = 1\n").unwrap();
        assert_eq!(cfg.to_text(), "a = 1\nb = 2\n");
        assert_eq!(KvConfig::parse(&cfg.to_text()).unwrap().entries(), cfg.entries());
    }
}
