//! Provenance record written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    /// SHA-256 of the resolved run configuration, or of the argument list
    /// for commands without one.
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub wall_ms: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Manifest {
    pub fn new(command: &str, config_sha256: String) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
            seed: None,
            threads: crate::threads_from_env(),
            wall_ms: BTreeMap::new(),
            outputs: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    /// Record the wall time of one phase.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.wall_ms.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    pub fn write(mut self, path: &Path) -> CliResult<()> {
        if let Some(start) = self.started {
            self.wall_ms.insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
        }
        let text = serde_json::to_string_pretty(&self).map_err(|e| crate::error::CliError::Other(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// `<file>.manifest.json` for single-file outputs.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
