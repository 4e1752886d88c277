use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Sidecar written next to every output as `<out>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    /// Command-specific extras, e.g. the p-offset of an optimized ancilla.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T, seed: Option<u64>, outputs: Vec<PathBuf>, start: Instant) -> Self {
        RunManifest {
            command: command.into(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs,
            wall_time_s: start.elapsed().as_secs_f64(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&self, out: &Path) -> Result<(), Failure> {
        let path = Self::path_for(out);
        let text = serde_json::to_string_pretty(self).map_err(Failure::numerical)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::usage)
    }
}
