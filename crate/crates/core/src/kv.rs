//! Flat `key = value` text files shared by scenario and experiment configs.
//!
//! Blank lines and everything after `#` are ignored. Keys may repeat only if
//! the consumer allows it; the last occurrence wins otherwise.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KvError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Other(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: Vec<Entry>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KvError::Line {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError::Line {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            entries.push(Entry {
                line: i + 1,
                key: key.to_string(),
                value: v.trim().to_string(),
            });
        }
        Ok(Self { entries })
    }

    /// Appends an entry that did not come from a file (e.g. a command-line
    /// override); errors about it carry no line number.
    pub fn push(&mut self, key: &str, value: &str) {
        self.entries.push(Entry {
            line: 0,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }

    pub fn read(path: &Path) -> Result<Self, KvError> {
        let text = std::fs::read_to_string(path).map_err(|e| KvError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Parses `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| entry_error(e, format!("{key}: {err}"))),
        }
    }

    /// Parses a comma-separated list under `key` if present.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, KvError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => split_list(&e.value)
                .map(|item| {
                    item.parse::<T>()
                        .map_err(|err| entry_error(e, format!("{key}: '{item}': {err}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    /// Errors on any key outside `known` (prefix match for entries ending in `.`).
    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), KvError> {
        for e in &self.entries {
            let ok = known.iter().any(|k| {
                if k.ends_with('.') {
                    e.key.starts_with(k)
                } else {
                    e.key == *k
                }
            });
            if !ok {
                return Err(entry_error(e, format!("unknown key '{}'", e.key)));
            }
        }
        Ok(())
    }
}

fn entry_error(e: &Entry, msg: String) -> KvError {
    match e.line {
        0 => KvError::Other(msg),
        line => KvError::Line { line, msg },
    }
}

pub fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got '{other}'")),
    }
}
