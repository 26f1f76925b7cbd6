//! Run manifests: a JSON record of exactly what a command ran, written
//! alongside its outputs so the run can be reproduced later.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Everything needed to replay one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Canonical flag tokens, exactly as the parser accepts them. Worker
    /// count is deliberately absent: results are worker-count independent.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Manifest path for outputs under a `--out` file path: the output's
/// extension is replaced with `manifest.json`.
pub fn manifest_path_for_out(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Manifest path for outputs under an `--out-prefix` stem.
pub fn manifest_path_for_prefix(prefix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.manifest.json"))
}
