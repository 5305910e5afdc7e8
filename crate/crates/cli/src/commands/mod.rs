pub mod analyze;
pub mod compare;
pub mod evolve;
pub mod export;
pub mod init;

use std::path::{Path, PathBuf};

use clap::Args;

use crate::config::{Preset, RunConfig};
use crate::error::{CliError, CliResult};

/// Where the run configuration comes from.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Start from a named preset's defaults instead of a file.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Override one configuration key, e.g. `--set evolution.policy.chi_max=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    /// Resolve from `--config`, `--preset` or a fallback TOML file.
    pub fn resolve(&self, fallback: Option<&Path>) -> CliResult<Option<RunConfig>> {
        if let Some(path) = &self.config {
            return RunConfig::load(path, &self.overrides).map(Some);
        }
        if let Some(preset) = self.preset {
            return RunConfig::from_preset(preset, &self.overrides).map(Some);
        }
        match fallback {
            Some(path) if path.is_file() => RunConfig::load(path, &self.overrides).map(Some),
            _ => Ok(None),
        }
    }
}

/// Ensemble fan-out over seeds, one child process per replica.
#[derive(Args, Debug, Clone, Default)]
pub struct FanOutArgs {
    /// Launch this many isolated replicas under `<out>/replica_NNN`.
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Seeds of the replicas (defaults to `seed`, `seed + 1`, ...).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

impl FanOutArgs {
    pub fn active(&self) -> bool {
        self.replicas.is_some() || !self.seeds.is_empty()
    }

    pub fn seeds(&self, base: u64) -> CliResult<Vec<u64>> {
        match (self.replicas, self.seeds.is_empty()) {
            (Some(0), _) => Err(CliError::Config("--replicas must be positive".into())),
            (Some(n), true) => Ok((0..n as u64).map(|k| base + k).collect()),
            (Some(n), false) if n != self.seeds.len() => {
                Err(CliError::Config(format!("--replicas {n} does not match {} seeds", self.seeds.len())))
            }
            _ => Ok(self.seeds.clone()),
        }
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("cannot create {}: {e}", dir.display())))
}
