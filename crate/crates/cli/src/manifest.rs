use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{GridSpec, Method};
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Simulate,
    Filter,
    Scan,
    Compare,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Filter => "filter",
            CommandKind::Scan => "scan",
            CommandKind::Compare => "compare",
        }
    }
}

/// Everything needed to repeat a run. Passing this file back as `--config`
/// reproduces the run's outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: CommandKind,
    pub tool_version: String,
    pub seed: u64,
    pub trace: bool,
    pub method: Option<Method>,
    pub grid: Option<GridSpec>,
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    /// Fully resolved configuration, defaults applied.
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

/// A manifest is recognised by its `tool_version` and `command` keys.
pub fn as_manifest(text: &str, path: &Path) -> CliResult<Option<RunManifest>> {
    let Ok(value) = serde_json::from_str::<serde_json::Value>(text) else {
        return Ok(None);
    };
    if value.get("tool_version").is_none() || value.get("command").is_none() {
        return Ok(None);
    }
    crate::config::parse_json(text, path).map(Some)
}

pub fn tool_version() -> String {
    format!("cs-stap {}", env!("CARGO_PKG_VERSION"))
}
