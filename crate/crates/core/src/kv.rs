//! Minimal `key = value` config-file parsing shared by the simulation,
//! synthetic-trace and experiment configs. Lines starting with `#` and
//! blank lines are ignored.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {0}: expected `key = value`")]
    Malformed(usize),
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("key `{key}`: cannot parse `{value}` as {ty}")]
    BadValue {
        key: String,
        value: String,
        ty: &'static str,
    },
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Debug, Default, Clone)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(KvError::Malformed(idx + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(KvError::Duplicate { line: idx + 1, key });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str, ty: &'static str) -> Result<Option<T>, KvError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| KvError::BadValue {
                key: key.to_string(),
                value: raw.clone(),
                ty,
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, KvError> {
        Ok(self.parsed(key, "integer")?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, KvError> {
        Ok(self.parsed(key, "integer")?.unwrap_or(default))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, KvError> {
        Ok(self.parsed(key, "number")?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, KvError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| KvError::BadValue {
                        key: key.to_string(),
                        value: raw.clone(),
                        ty: "number list",
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}
