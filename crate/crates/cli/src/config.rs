//! Merging of `--config` files with command-line flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Common {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<orbit_heights::Execution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

const COMMON_KEYS: [&str; 4] = ["format", "output", "execution", "seed"];

/// A parsed config file, split into shared options and command options.
#[derive(Debug, Default)]
pub struct FileConfig {
    common: Map<String, Value>,
    command: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("config {} is not valid JSON: {e}", path.display())))?;
        let Value::Object(mut map) = value else {
            return Err(CliError::Invalid("config must be a JSON object".into()));
        };
        if let Some(named) = map.remove("command") {
            if named.as_str() != Some(command) {
                return Err(CliError::Invalid(format!("config is for command {named}, not {command:?}")));
            }
        }
        let mut common = Map::new();
        for key in COMMON_KEYS {
            if let Some(v) = map.remove(key) {
                common.insert(key.to_string(), v);
            }
        }
        Ok(FileConfig { common, command: map })
    }

    pub fn common(&self, flags: &Common) -> Result<Common, CliError> {
        merge(&self.common, flags)
    }

    pub fn command<A: Serialize + DeserializeOwned>(&self, flags: &A) -> Result<A, CliError> {
        merge(&self.command, flags)
    }
}

/// File values overlaid by every flag that was given.
fn merge<A: Serialize + DeserializeOwned>(file: &Map<String, Value>, flags: &A) -> Result<A, CliError> {
    let mut merged = file.clone();
    match serde_json::to_value(flags).map_err(|e| CliError::Invalid(e.to_string()))? {
        Value::Object(given) => merged.extend(given),
        other => return Err(CliError::Invalid(format!("unexpected flag encoding {other}"))),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Invalid(format!("config: {e}")))
}

pub fn require<T: Clone>(value: &Option<T>, flag: &'static str) -> Result<T, CliError> {
    value.clone().ok_or(CliError::Missing(flag))
}
