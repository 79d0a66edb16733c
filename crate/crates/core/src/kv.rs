//! Flat key-value text files: `key = value` lines, `#` comments, blank lines
//! ignored. Used by both the study config and the synthetic-panel spec.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("key {key:?}: {message}")]
    BadValue { key: String, message: String },
    #[error("missing required key {key:?}")]
    MissingKey { key: String },
}

/// A parsed key-value file.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    pairs: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut pairs = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KvError::Malformed {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if pairs.contains_key(&key) {
                return Err(KvError::DuplicateKey { line: i + 1, key });
            }
            pairs.insert(key, value);
        }
        Ok(KvFile { pairs })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey {
            key: key.to_string(),
        })
    }

    /// Parses an optional key, falling back to `default`.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|e: T::Err| KvError::BadValue {
                key: key.to_string(),
                message: e.to_string(),
            }),
        }
    }

    /// Parses a required key.
    pub fn get_required<T: FromStr>(&self, key: &str) -> Result<T, KvError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e: T::Err| KvError::BadValue {
            key: key.to_string(),
            message: e.to_string(),
        })
    }

    /// Parses an optional key to `Option<T>` (absent key = None).
    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e: T::Err| KvError::BadValue {
                    key: key.to_string(),
                    message: e.to_string(),
                }),
        }
    }

    /// Parses a whitespace- or comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, KvError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for token in raw.split(|c: char| c.is_whitespace() || c == ',') {
            if token.is_empty() {
                continue;
            }
            out.push(token.parse::<f64>().map_err(|e| KvError::BadValue {
                key: key.to_string(),
                message: format!("{e} in token {token:?}"),
            })?);
        }
        Ok(Some(out))
    }
}
