use std::path::Path;

use serde_json::{Map, Value};

use crate::CliError;

/// Flat JSON configuration: option names (long-flag spelling) to values.
/// Precedence everywhere is CLI flag > config file > built-in default.
#[derive(Debug, Default, Clone)]
pub struct Config {
    map: Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {path:?}: {e}")))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {path:?} is not valid JSON: {e}")))?;
        match value {
            Value::Object(map) => {
                if map.values().any(|v| v.is_object() || v.is_array()) {
                    return Err(CliError::validation(
                        "config must be a flat JSON object of scalars".into(),
                    ));
                }
                Ok(Self { map })
            }
            _ => Err(CliError::validation(
                "config must be a flat JSON object".into(),
            )),
        }
    }

    pub fn f64(&self, key: &str, cli: Option<f64>, default: f64) -> Result<f64, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| {
                CliError::validation(format!("config key '{key}' must be a number"))
            }),
        }
    }

    pub fn usize(&self, key: &str, cli: Option<usize>, default: usize) -> Result<usize, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| CliError::validation(format!("config key '{key}' must be a count"))),
        }
    }

    pub fn i64(&self, key: &str, cli: Option<i64>, default: i64) -> Result<i64, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_i64().ok_or_else(|| {
                CliError::validation(format!("config key '{key}' must be an integer"))
            }),
        }
    }

    pub fn string(&self, key: &str, cli: Option<String>, default: &str) -> Result<String, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| CliError::validation(format!("config key '{key}' must be a string"))),
        }
    }
}
