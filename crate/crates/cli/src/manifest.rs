//! Per-run provenance record written next to every output artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    /// Input path -> sha256, taken before the command runs.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

pub fn sha256_file(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|b| hex::encode(Sha256::digest(&b)))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Everything a command needs recorded about its run.
pub struct Run {
    pub command: &'static str,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &'static str, out: &Path) -> Self {
        Self {
            command,
            out: out.to_path_buf(),
            seed: None,
            config: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn input(mut self, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.inputs.push(p.to_path_buf());
        }
        self
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    /// Digests the inputs, runs `body`, then writes the manifest whether or
    /// not `body` succeeded. `body` returns the files it wrote.
    pub fn execute<F>(self, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BTreeMap<String, String>, &mut Option<u64>) -> Result<Vec<PathBuf>, CliError>,
    {
        let inputs: BTreeMap<String, String> = self
            .inputs
            .iter()
            .map(|p| {
                let digest = sha256_file(p).unwrap_or_else(|| "missing".to_string());
                (p.display().to_string(), digest)
            })
            .collect();
        let started_at = now();
        let mut config = self.config;
        let mut seed = self.seed;
        let result = body(&mut config, &mut seed);
        let outputs = match &result {
            Ok(paths) => paths
                .iter()
                .filter_map(|p| sha256_file(p).map(|d| (p.display().to_string(), d)))
                .collect(),
            Err(_) => BTreeMap::new(),
        };
        let manifest = RunManifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs,
            outputs,
            started_at,
            finished_at: now(),
            status: if result.is_ok() { "ok" } else { "failed" }.to_string(),
            exit_code: result.as_ref().map_or_else(CliError::exit_code, |_| 0),
            error: result.as_ref().err().map(ToString::to_string),
        };
        let path = manifest_path(&self.out);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Err(e) = fs::write(&path, json + "\n") {
            log::warn!("could not write manifest {}: {e}", path.display());
        }
        result.map(|_| ())
    }
}
