//! The corpus manifest: a JSON file listing ads, labels, session stream
//! files, labeled moments, and demographics.

use std::path::{Path, PathBuf};

use affectstream::evaluation::Demographics;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSession {
    pub session_id: String,
    /// Stream file path, relative to the manifest's directory.
    pub stream: PathBuf,
    #[serde(default)]
    pub demographics: Demographics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestAd {
    pub ad_id: String,
    pub label: bool,
    /// Labeled intervals [start_ms, end_ms) on the ad timeline.
    #[serde(default)]
    pub moments: Vec<(u64, u64)>,
    pub sessions: Vec<ManifestSession>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub ads: Vec<ManifestAd>,
}

impl CorpusManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write manifest {}: {e}", path.display())))
    }

    pub fn session_count(&self) -> usize {
        self.ads.iter().map(|ad| ad.sessions.len()).sum()
    }
}
