use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    /// Tolerance up to which replayed floating-point outputs must agree.
    pub float_tolerance: f64,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// `<out>.manifest.json` next to the primary output.
pub fn default_manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out` with its extension replaced by `suffix`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}
