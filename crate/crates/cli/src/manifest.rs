use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> CliResult<FileRecord> {
        let bytes = std::fs::read(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        Ok(FileRecord {
            path: path.to_path_buf(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

/// What one command read, wrote and was asked to do.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub threads: usize,
    pub parameters: Value,
    /// Content hash of every network the command used.
    pub graph_hashes: Vec<String>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_time_secs: f64,
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    started: Instant,
    pub seed: Option<u64>,
    pub parameters: Value,
    pub graph_hashes: Vec<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str) -> Recorder {
        Recorder {
            command: command.to_string(),
            started: Instant::now(),
            seed: None,
            parameters: Value::Null,
            graph_hashes: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    pub fn output(&mut self, path: &Path) {
        if !self.outputs.iter().any(|p| p == path) {
            self.outputs.push(path.to_path_buf());
        }
    }

    /// Records the command's main artifact, which names the run manifest.
    pub fn primary(&mut self, path: &Path) {
        self.outputs.retain(|p| p != path);
        self.outputs.insert(0, path.to_path_buf());
    }

    pub fn outputs(&self) -> &[PathBuf] {
        &self.outputs
    }

    /// Writes `<first output>.run.json` and returns its path.
    pub fn finish(self, threads: usize) -> CliResult<Option<PathBuf>> {
        let Some(first) = self.outputs.first() else {
            return Ok(None);
        };
        let mut name = first.file_name().unwrap_or_default().to_os_string();
        name.push(".run.json");
        let target = first.with_file_name(name);
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            threads,
            parameters: self.parameters,
            graph_hashes: self.graph_hashes,
            inputs: self.inputs.iter().map(|p| FileRecord::of(p)).collect::<CliResult<_>>()?,
            outputs: self.outputs.iter().map(|p| FileRecord::of(p)).collect::<CliResult<_>>()?,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(&target, json + "\n").map_err(|e| CliError::runtime(format!("{}: {e}", target.display())))?;
        Ok(Some(target))
    }
}
