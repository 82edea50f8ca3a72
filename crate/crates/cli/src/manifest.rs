use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

/// Provenance record written next to every output.
///
/// `config_text` is a complete config file: passing the manifest itself
/// to `--config` reruns the command with identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Option<RunConfig>,
    pub config_text: Option<String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&RunConfig>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.map(|c| c.seed),
            config: config.cloned(),
            config_text: config.map(RunConfig::to_text),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    /// Writes `<dir>/<command>.manifest.json` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let json = serde_json::to_string_pretty(self).expect("plain record");
        fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Reads a config file, or the embedded config of a manifest.
pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a run manifest: {e}", path.display())))?;
        let embedded = manifest
            .config_text
            .ok_or_else(|| CliError::Config(format!("{}: manifest has no configuration", path.display())))?;
        return RunConfig::parse(&embedded);
    }
    RunConfig::parse(&text)
}
