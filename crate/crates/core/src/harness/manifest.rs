//! Per-run manifest written next to CLI outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{FreqCacheError, Result};
use crate::harness::config::RunConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub input: String,
    pub outputs: Vec<String>,
    /// Wall-clock duration of the whole run; the only nondeterministic field.
    pub wall_clock_ms: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig, input: impl Into<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            input: input.into(),
            outputs: Vec::new(),
            wall_clock_ms: 0.0,
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| FreqCacheError::Io(e.to_string()))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// `dir/manifest.json` for directory outputs, `file.manifest.json` for a file.
pub fn manifest_path(output: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        output.join(MANIFEST_NAME)
    } else {
        let mut name = output
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}
