//! Reproducibility ledger: every command emits exactly one `manifest.json`
//! into its output directory. A manifest plus the recorded config snapshot
//! is enough to re-execute the run bit-identically; the benchmark harness
//! also uses manifest presence to skip completed runs on resume.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::io::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_snapshot: BTreeMap<String, String>,
    /// Content digest (sha256 hex) per input file.
    pub input_hashes: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
    pub wall_time_secs: f64,
}

pub struct ManifestBuilder {
    command: String,
    config_snapshot: BTreeMap<String, String>,
    input_hashes: BTreeMap<String, String>,
    output_paths: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_snapshot: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            output_paths: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, snapshot: BTreeMap<String, String>) -> &mut Self {
        self.config_snapshot.extend(snapshot);
        self
    }

    pub fn config_entry(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config_snapshot.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> CliResult<&mut Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.input_hashes.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.output_paths.push(path.display().to_string());
        self
    }

    /// Writes `manifest.json` into `dir`, stamped with the elapsed wall time.
    pub fn write(self, dir: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            config_snapshot: self.config_snapshot,
            input_hashes: self.input_hashes,
            output_paths: self.output_paths,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_exists(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}
