//! Run manifests: what was run, with which configuration and seed, and
//! where the outputs went.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    /// SHA-256 of the canonical JSON form of `config`.
    pub config_digest: String,
    pub seed: u64,
    pub versions: Versions,
    pub elapsed_seconds: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub missrate: String,
    pub format: u32,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_digest: config_digest(&config),
            config,
            seed,
            versions: Versions {
                missrate: env!("CARGO_PKG_VERSION").to_string(),
                format: 1,
            },
            elapsed_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, elapsed: Duration, outputs: Vec<String>) {
        self.elapsed_seconds = elapsed.as_secs_f64();
        self.outputs = outputs;
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Canonical JSON: object keys sorted bytewise, no insignificant whitespace.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (n, k) in keys.into_iter().enumerate() {
                if n > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (n, item) in items.iter().enumerate() {
                if n > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn config_digest(config: &Value) -> String {
    hex::encode(Sha256::digest(canonical_json(config).as_bytes()))
}
