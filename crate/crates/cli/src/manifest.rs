use std::path::{Path, PathBuf};

use gapro_core::labeler::{LabelerConfig, PairReport};
use gapro_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub points: PathBuf,
    pub boxes: PathBuf,
    pub superpoints: Option<PathBuf>,
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub labels: PathBuf,
    pub manifest: Option<PathBuf>,
    pub export_ply: Option<PathBuf>,
    pub export_variance_ply: Option<PathBuf>,
}

/// Everything needed to reproduce a `generate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: LabelerConfig,
    pub inputs: Inputs,
    pub outputs: Outputs,
    pub duration_secs: f64,
    pub pairs: Vec<PairReport>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest {}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
