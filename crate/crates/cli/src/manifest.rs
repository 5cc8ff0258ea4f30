//! Run manifests written next to every output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

pub const MANIFEST_SCHEMA: &str = "sepnmf.manifest/1";

#[derive(Debug, Clone, Serialize)]
pub struct InputChecksum {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub inputs: Vec<InputChecksum>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(config: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA,
            command: std::env::args().collect::<Vec<_>>().join(" "),
            config: serde_json::to_value(config).expect("arguments serialize"),
            seed,
            version: sepnmf::VERSION,
            inputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn input(mut self, path: &Path, bytes: &[u8]) -> Self {
        self.inputs.push(InputChecksum {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::io("writing output", path, e))
}

/// `prefix` with `suffix` appended to the file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
