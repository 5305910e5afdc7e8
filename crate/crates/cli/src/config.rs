//! Run configuration: a TOML document with `grid`, `initial`, `evolution`
//! and `output` tables. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use qgpe::initial::{DarkSoliton, ReconnectionParams, RpiBackend, RpiParams, SolitonParams};
use qgpe::tdvp::EvolutionConfig;
use qgpe::{OrderingKind, QuanticsGrid, ScaleOrdering, TruncationPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Soliton,
    Dipole,
    Ring,
    Reconnection,
    Rpi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Mps,
    Dns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Sequential,
    Interleaved,
    Stair,
    StairSmallScale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: usize,
    /// Qubits per axis.
    pub n: usize,
    /// Box side in ξ.
    pub length: f64,
    #[serde(default = "default_ordering")]
    pub ordering: Ordering,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axis_permutation: Vec<usize>,
}

fn default_ordering() -> Ordering {
    Ordering::Stair
}

impl GridConfig {
    pub fn build(&self) -> CliResult<QuanticsGrid> {
        let kind = match self.ordering {
            Ordering::Sequential => OrderingKind::Sequential,
            Ordering::Interleaved => OrderingKind::Interleaved,
            Ordering::Stair => OrderingKind::Stair,
            Ordering::StairSmallScale => OrderingKind::StairSmallScale,
        };
        let ordering = ScaleOrdering { kind, axis_permutation: self.axis_permutation.clone(), custom: None };
        Ok(QuanticsGrid::new(self.dims, self.n, self.length, ordering)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleConfig {
    /// Core separation in ξ, centred in the box.
    #[serde(default = "default_dipole_separation")]
    pub separation: f64,
    /// Explicit core positions; override `separation` when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<[f64; 2]>,
}

fn default_dipole_separation() -> f64 {
    10.0
}

impl Default for DipoleConfig {
    fn default() -> Self {
        DipoleConfig { separation: default_dipole_separation(), r1: None, r2: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub radius: f64,
}

impl Default for RingConfig {
    fn default() -> Self {
        RingConfig { radius: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub preset: Preset,
    /// Imaginary-time relaxation applied after construction, in ξ/c.
    #[serde(default)]
    pub relax_time: f64,
    #[serde(default)]
    pub soliton: SolitonParams,
    #[serde(default)]
    pub dipole: DipoleConfig,
    #[serde(default)]
    pub ring: RingConfig,
    #[serde(default)]
    pub reconnection: ReconnectionParams,
    /// The coarse-field seed comes from the top-level `seed`.
    #[serde(default)]
    pub rpi: RpiParams,
    #[serde(default = "default_rpi_backend")]
    pub rpi_backend: RpiBackend,
}

fn default_rpi_backend() -> RpiBackend {
    RpiBackend::Dense
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// Vortex count in 2D, line length in 3D.
    Vortices,
    /// Incompressible and compressible kinetic energies.
    Energies,
    SolitonDensity,
    /// Per-snapshot shell spectra.
    Spectra,
    /// Per-snapshot radial correlation function.
    Correlation,
    /// Density profile in long format (1D only).
    Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Physical time between snapshots; 0 keeps only the first and last.
    #[serde(default)]
    pub snapshot_interval: f64,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    /// Write measured step wall times into `steps.csv` (zeros otherwise).
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("run")
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            snapshot_interval: 0.0,
            diagnostics: Vec::new(),
            record_wall_time: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: Backend,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Defaults reproducing each benchmark's published setup.
    pub fn preset(preset: Preset) -> Self {
        let grid = |dims, n, length| GridConfig { dims, n, length, ordering: Ordering::Stair, axis_permutation: Vec::new() };
        let initial = InitialConfig {
            preset,
            relax_time: 0.0,
            soliton: SolitonParams::default(),
            dipole: DipoleConfig::default(),
            ring: RingConfig::default(),
            reconnection: ReconnectionParams::default(),
            rpi: RpiParams::default(),
            rpi_backend: default_rpi_backend(),
        };
        let mut config = RunConfig {
            seed: 0,
            backend: Backend::Mps,
            grid: grid(1, 7, 32.0),
            initial,
            evolution: EvolutionConfig::default(),
            output: OutputConfig::default(),
        };
        match preset {
            Preset::Soliton => {
                config.evolution.policy = TruncationPolicy { chi_max: Some(4), eps: 1e-16 };
                let period = DarkSoliton::new(32.0, SolitonParams::default()).map(|s| s.period()).unwrap_or(0.0);
                config.evolution.t_final = (period / config.evolution.dt).round() * config.evolution.dt;
                config.output.snapshot_interval = config.evolution.t_final / 8.0;
                config.output.diagnostics = vec![Diagnostic::SolitonDensity, Diagnostic::Profile];
            }
            Preset::Dipole => {
                config.grid = grid(2, 7, 32.0);
                config.initial.relax_time = 1.0;
                config.evolution.gamma = 1e-3;
                config.evolution.dt = 1.0 / 64.0;
                config.evolution.policy = TruncationPolicy { chi_max: Some(12), eps: 1e-16 };
                config.evolution.t_final = 242.0;
                config.output.snapshot_interval = 24.0;
                config.output.diagnostics = vec![Diagnostic::Vortices, Diagnostic::Energies];
            }
            Preset::Ring => {
                config.grid = grid(3, 6, 32.0);
                config.initial.relax_time = 1.0;
                config.evolution.gamma = 1e-2;
                config.evolution.dt = 1.0 / 64.0;
                config.evolution.policy = TruncationPolicy { chi_max: Some(18), eps: 1e-16 };
                config.evolution.t_final = 20.0;
                config.output.snapshot_interval = 2.0;
                config.output.diagnostics = vec![Diagnostic::Vortices];
            }
            Preset::Reconnection => {
                config.grid = grid(3, 8, 64.0);
                config.evolution.policy = TruncationPolicy { chi_max: Some(40), eps: 1e-16 };
                config.evolution.t_final = 10.0;
                config.output.snapshot_interval = 1.0;
            }
            Preset::Rpi => {
                config.grid = grid(2, 8, 64.0);
                config.backend = Backend::Dns;
                config.evolution.gamma = 1e-2;
                config.evolution.dt = 1.0 / 64.0;
                config.evolution.t_final = 50.0;
                config.output.snapshot_interval = 10.0;
                config.output.diagnostics =
                    vec![Diagnostic::Vortices, Diagnostic::Energies, Diagnostic::Spectra, Diagnostic::Correlation];
            }
        }
        config
    }

    /// Parse a TOML document, apply `key=value` overrides and validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        apply_overrides(&mut doc, overrides)?;
        let config: RunConfig = doc.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Preset defaults with overrides applied.
    pub fn from_preset(preset: Preset, overrides: &[String]) -> CliResult<Self> {
        Self::from_toml(&Self::preset(preset).to_toml()?, overrides)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> CliResult<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }

    /// Checks that need no allocation beyond the config itself.
    pub fn validate(&self) -> CliResult<()> {
        self.grid.build()?;
        self.evolution.validate()?;
        if !(self.output.snapshot_interval >= 0.0 && self.output.snapshot_interval.is_finite()) {
            return Err(CliError::Config("output.snapshot_interval must be non-negative".into()));
        }
        if !(self.initial.relax_time >= 0.0 && self.initial.relax_time.is_finite()) {
            return Err(CliError::Config("initial.relax_time must be non-negative".into()));
        }
        if self.initial.rpi.seed != 0 && self.initial.rpi.seed != self.seed {
            return Err(CliError::Config("set the random seed with the top-level `seed` key, not initial.rpi.seed".into()));
        }
        let dims = self.grid.dims;
        let needs = |want: usize, name: &str| {
            if dims == want {
                Ok(())
            } else {
                Err(CliError::Config(format!("the {name} preset needs a {want}D grid, got {dims}D")))
            }
        };
        match self.initial.preset {
            Preset::Soliton => needs(1, "soliton")?,
            Preset::Dipole => needs(2, "dipole")?,
            Preset::Ring => needs(3, "ring")?,
            Preset::Reconnection => {
                needs(3, "reconnection")?;
                if self.grid.ordering != Ordering::Stair || !self.grid.axis_permutation.is_empty() {
                    return Err(CliError::Config("the reconnection preset is built on the default stair ordering".into()));
                }
            }
            Preset::Rpi => {}
        }
        let dense_bits = self.grid.dims * self.grid.n;
        if !self.output.diagnostics.is_empty() && dense_bits > 27 {
            return Err(CliError::Numerical(format!(
                "dense diagnostics are limited to 2^27 points, the grid has 2^{dense_bits}; use export --plane or --region"
            )));
        }
        if self.backend == Backend::Dns && dense_bits > 27 {
            return Err(CliError::Numerical(format!(
                "the dense backend is limited to 2^27 points, the grid has 2^{}",
                self.grid.dims * self.grid.n
            )));
        }
        Ok(())
    }
}

/// Apply `a.b.c=value` assignments; values parse as TOML and fall back to strings.
fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> CliResult<()> {
    for assignment in overrides {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let mut table = &mut *doc;
        for part in &parts[..parts.len() - 1] {
            let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not a table")))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for preset in [Preset::Soliton, Preset::Dipole, Preset::Ring, Preset::Reconnection, Preset::Rpi] {
            let config = RunConfig::preset(preset);
            let back = RunConfig::from_toml(&config.to_toml().unwrap(), &[]).unwrap();
            assert_eq!(back, config);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = RunConfig::preset(Preset::Soliton).to_toml().unwrap();
        text.push_str("\n[extra]\nanswer = 42\n");
        assert!(matches!(RunConfig::from_toml(&text, &[]), Err(CliError::Config(_))));
        let text = RunConfig::preset(Preset::Soliton).to_toml().unwrap();
        let err = RunConfig::from_toml(&text, &["evolution.gama=0.1".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn overrides_reach_nested_tables() {
        let config = RunConfig::from_preset(
            Preset::Soliton,
            &["evolution.policy.chi_max=3".into(), "evolution.splitting=Lie1".into(), "seed=9".into()],
        )
        .unwrap();
        assert_eq!(config.evolution.policy.chi_max, Some(3));
        assert_eq!(config.evolution.splitting, qgpe::tdvp::Splitting::Lie1);
        assert_eq!(config.seed, 9);
    }

    #[test]
    fn soliton_preset_runs_one_whole_period() {
        let config = RunConfig::preset(Preset::Soliton);
        let period = DarkSoliton::new(32.0, SolitonParams::default()).unwrap().period();
        assert!((config.evolution.t_final - period).abs() <= config.evolution.dt / 2.0);
        let steps = config.evolution.t_final / config.evolution.dt;
        assert_eq!(steps, steps.round());
    }

    #[test]
    fn validation_catches_mismatched_presets_and_caps() {
        let err = RunConfig::from_preset(Preset::Dipole, &["grid.dims=3".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err = RunConfig::from_preset(Preset::Rpi, &["grid.dims=3".into(), "grid.n=10".into()]).unwrap_err();
        assert!(matches!(err, CliError::Numerical(_)));
        let err = RunConfig::from_preset(Preset::Rpi, &["seed=3".into(), "initial.rpi.seed=4".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::preset(Preset::Ring);
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
