//! Layered configuration: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::error::CliError;

/// Reads a flat `key = value` file, or a JSON object when the first
/// non-blank character is `{`.
pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        parse_json(&text)
    } else {
        parse_key_value(&text)
    }
}

fn json_scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => items
            .iter()
            .map(|item| match item {
                Value::Array(_) => Err(CliError::Config(format!("key `{key}`: nested arrays are not supported"))),
                other => json_scalar(key, other),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| parts.join(",")),
        Value::Null | Value::Object(_) => Err(CliError::Config(format!(
            "key `{key}`: expected a string, number, boolean or list"
        ))),
    }
}

pub fn parse_json(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config("JSON config must be an object".into()));
    };
    map.iter().map(|(k, v)| Ok((k.clone(), json_scalar(k, v)?))).collect()
}

pub fn parse_key_value(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let v = v.trim();
        let v = v
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(v);
        out.insert(k.trim().to_string(), v.to_string());
    }
    Ok(out)
}

/// Resolved settings for one invocation.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges `defaults < file < flags`. Keys in `file` must appear in
    /// `defaults` (with or without a default value).
    pub fn resolve(
        defaults: &[(&str, Option<String>)],
        file: &BTreeMap<String, String>,
        flags: &[(&str, Option<String>)],
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, v) in defaults {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        for (k, v) in file {
            if !defaults.iter().any(|(d, _)| d == k) {
                let mut known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
                known.sort_unstable();
                return Err(CliError::Config(format!(
                    "unknown config key `{k}` (known keys: {})",
                    known.join(", ")
                )));
            }
            values.insert(k.clone(), v.clone());
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{key}`")))?;
        raw.parse()
            .map_err(|e| CliError::Config(format!("invalid value `{raw}` for `{key}`: {e}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{key}`")))?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("invalid list item `{s}` for `{key}`: {e}")))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.values).expect("string map serializes");
        s.push('\n');
        s
    }

    /// Writes `resolved_config.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("resolved_config.json");
        fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))
    }
}
