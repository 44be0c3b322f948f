//! Flat `key = value` configuration with flag overrides.
//!
//! A config file holds one `key = value` per line; blank lines and lines
//! starting with `#` are skipped. Flags given on the command line replace
//! file values key by key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses file contents, reporting every malformed line at once.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::new();
        let mut bad = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    let key = normalize(k);
                    if cfg.entries.contains_key(&key) {
                        bad.push(format!("line {}: duplicate key {key}", i + 1));
                    }
                    cfg.entries.insert(key, v.trim().to_owned());
                }
                _ => bad.push(format!(
                    "line {}: expected key = value, got {line:?}",
                    i + 1
                )),
            }
        }
        if bad.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Config(bad))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(normalize(key), value.to_string());
    }

    pub fn set_opt<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `key=value` pair from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }
}

/// Flags and file keys share one spelling: dashes become underscores, so
/// `--grid-n` and `grid_n` name the same key. Case is kept (`box_L`).
fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Typed access that records every problem instead of stopping at the first.
pub struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    pub fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    pub fn value<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: Display,
    {
        self.used.insert(key.to_owned());
        match self.raw.get(key) {
            None => default,
            Some(s) => s.parse().unwrap_or_else(|e| {
                self.errors.push(format!("{key}={s}: {e}"));
                default
            }),
        }
    }

    pub fn optional<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_owned());
        let s = self.raw.get(key)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{key}={s}: {e}"));
                None
            }
        }
    }

    /// Records a violated precondition.
    pub fn problem(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn problems(&mut self, msgs: impl IntoIterator<Item = String>) {
        self.errors.extend(msgs);
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }

    /// Fails with every collected problem, including keys nobody read.
    pub fn finish(mut self) -> Result<(), CliError> {
        let unknown: Vec<String> = self
            .raw
            .keys()
            .filter(|k| !self.used.contains(*k))
            .map(|k| format!("unknown key {k}"))
            .collect();
        self.errors.extend(unknown);
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut raw = RawConfig::parse("# comment\n\ngrid_n = 32\nbox-L=3.5\n").unwrap();
        raw.set("grid-n", 64);
        assert_eq!(raw.get("grid_n"), Some("64"));
        assert_eq!(raw.get("box_L"), Some("3.5"));
    }

    #[test]
    fn malformed_lines_are_all_reported() {
        match RawConfig::parse("a = 1\nnonsense\n= 2\na = 3") {
            Err(CliError::Config(list)) => assert_eq!(list.len(), 3, "{list:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reader_collects_every_problem() {
        let raw = RawConfig::parse("p = two\ndt = -\nextra = 1").unwrap();
        let mut r = Reader::new(&raw);
        assert_eq!(r.value("p", 2usize), 2);
        let _: f64 = r.value("dt", 0.1);
        let _: f64 = r.value("mass", 1.0);
        match r.finish() {
            Err(CliError::Config(list)) => {
                assert_eq!(list.len(), 3);
                assert!(list[2].contains("extra"));
            }
            other => panic!("{other:?}"),
        }
    }
}
