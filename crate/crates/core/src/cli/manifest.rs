use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario_file::ScenarioSource;
use crate::engine::Scenario;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Reproducibility record written into every output directory before any
/// results. Re-running `command` on `scenario` with the listed seeds and
/// ue counts regenerates the directory's other files byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub scenario_path: Option<PathBuf>,
    pub scenario_sha256: String,
    /// The scenario after defaults and command-line overrides.
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ue_counts: Vec<u32>,
    pub out_dir: PathBuf,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        scenario: &Scenario,
        source: &ScenarioSource,
        seeds: Vec<u64>,
        out_dir: &Path,
    ) -> Self {
        RunManifest {
            format_version: MANIFEST_VERSION,
            command: command.to_owned(),
            scenario_path: source.path.clone(),
            scenario_sha256: source.sha256.clone(),
            scenario: scenario.clone(),
            seeds,
            ue_counts: Vec::new(),
            out_dir: out_dir.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Creates `out_dir` if needed and writes the manifest into it. This is
    /// the first write of every command, so an unwritable directory fails
    /// before any simulation runs.
    pub fn write_to(&self, out_dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(out_dir).map_err(|e| Error::path_io(out_dir, e))?;
        let path = out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::path_io(&path, e))?;
        Ok(path)
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::path_io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
