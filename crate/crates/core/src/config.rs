//! Flat `key = value` text format shared by domain and experiment configs.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed key/value pairs, remembering the line each key came from.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config { line: line_no, message: "empty key".into() });
            }
            if entries.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Config { line: line_no, message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config { line: 0, message: format!("missing key `{key}`") })
    }

    pub fn parse_value<V: FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Config {
            line: self.line_of(key),
            message: format!("cannot parse `{raw}` for `{key}`"),
        })
    }

    pub fn parse_or<V: FromStr>(&self, key: &str, default: V) -> Result<V> {
        if self.contains(key) {
            self.parse_value(key)
        } else {
            Ok(default)
        }
    }

    /// Comma-separated list value.
    pub fn parse_list<V: FromStr>(&self, key: &str) -> Result<Vec<V>> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| Error::Config {
                    line: self.line_of(key),
                    message: format!("cannot parse list item `{s}` for `{key}`"),
                })
            })
            .collect()
    }
}
