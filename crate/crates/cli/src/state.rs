//! Building, converting and saving the evolving state.

use std::path::{Path, PathBuf};

use qgpe::dns::{dns_imaginary_time, DenseField, DnsImaginaryOptions};
use qgpe::initial::{
    dipole_sampler, random_phase_state, reconnection_state, ring_sampler, vortex_dipole, vortex_ring, DarkSoliton,
    DipoleParams, RpiParams,
};
use qgpe::io::{save_field, save_mps};
use qgpe::tdvp::{imaginary_time_evolve, particle_number, EvolutionConfig, ImaginaryTimeOptions, TimeMode};
use qgpe::MpsState;
use serde::{Deserialize, Serialize};

use crate::config::{Backend, Preset, RunConfig};
use crate::error::CliResult;
use crate::snapshot::Snapshot;

pub enum State {
    Mps(MpsState),
    Dense(DenseField),
}

/// Per-snapshot summary written to `state.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub t: f64,
    pub particle_number: f64,
    pub chi_max: usize,
    pub memory_ratio: f64,
}

impl State {
    pub fn summary(&self, t: f64) -> StateRow {
        match self {
            State::Mps(s) => StateRow { t, particle_number: particle_number(s), chi_max: s.max_bond(), memory_ratio: s.memory_ratio() },
            State::Dense(f) => StateRow { t, particle_number: f.particle_number(), chi_max: 0, memory_ratio: 1.0 },
        }
    }

    /// Dense samples, subject to the dense size cap.
    pub fn dense(&self) -> CliResult<DenseField> {
        match self {
            State::Mps(s) => Ok(DenseField::from_mps(s)?),
            State::Dense(f) => Ok(f.clone()),
        }
    }

    /// Convert to the representation used by `backend`.
    pub fn into_backend(self, backend: Backend, config: &EvolutionConfig) -> CliResult<State> {
        Ok(match (self, backend) {
            (State::Mps(s), Backend::Dns) => State::Dense(DenseField::from_mps(&s)?),
            (State::Dense(f), Backend::Mps) => State::Mps(f.to_mps(&config.policy)?),
            (state, _) => state,
        })
    }

    /// Write `<stem>.qmps` or `<stem>.qfld` and return the path.
    pub fn save(&self, dir: &Path, stem: &str, t: f64, params: serde_json::Value) -> CliResult<PathBuf> {
        Ok(match self {
            State::Mps(s) => {
                let path = dir.join(format!("{stem}.qmps"));
                save_mps(&path, s, t, params)?;
                path
            }
            State::Dense(f) => {
                let path = dir.join(format!("{stem}.qfld"));
                save_field(&path, f, t, params)?;
                path
            }
        })
    }

    pub fn from_snapshot(snapshot: Snapshot) -> State {
        match snapshot {
            Snapshot::Mps { state, .. } => State::Mps(state),
            Snapshot::Field { field, .. } => State::Dense(field),
        }
    }
}

/// Header parameters attached to every snapshot of a run.
pub fn snapshot_params(config: &RunConfig) -> CliResult<serde_json::Value> {
    let config = serde_json::to_value(config).map_err(|e| crate::error::CliError::Other(e.to_string()))?;
    Ok(serde_json::json!({ "config": config }))
}

/// Construct the configured initial state in the backend's representation,
/// including the optional imaginary-time relaxation.
pub fn build_initial(config: &RunConfig) -> CliResult<State> {
    let grid = config.grid.build()?;
    let length = grid.length();
    let policy = &config.evolution.policy;
    let dense = config.backend == Backend::Dns;
    let initial = &config.initial;
    let state = match initial.preset {
        Preset::Soliton => {
            let soliton = DarkSoliton::new(length, initial.soliton.clone())?;
            if dense {
                State::Dense(soliton.dense(&grid, 0.0)?)
            } else {
                State::Mps(soliton.mps(&grid, 0.0, policy)?)
            }
        }
        Preset::Dipole => {
            let params = match (initial.dipole.r1, initial.dipole.r2) {
                (Some(r1), Some(r2)) => DipoleParams { r1, r2 },
                (None, None) => DipoleParams::centered(length, initial.dipole.separation),
                _ => return Err(crate::error::CliError::Config("give both dipole cores r1 and r2, or neither".into())),
            };
            if dense {
                State::Dense(vortex_dipole(&grid, &params)?)
            } else {
                let sampler = dipole_sampler(length, &params)?;
                State::Mps(MpsState::encode_function(&grid, |x: &[f64]| sampler(x), policy)?)
            }
        }
        Preset::Ring => {
            if dense {
                State::Dense(vortex_ring(&grid, initial.ring.radius)?)
            } else {
                let sampler = ring_sampler(length, initial.ring.radius)?;
                State::Mps(MpsState::encode_function(&grid, |x: &[f64]| sampler(x), policy)?)
            }
        }
        Preset::Reconnection => {
            State::Mps(reconnection_state(config.grid.n, length, &initial.reconnection, policy)?)
                .into_backend(config.backend, &config.evolution)?
        }
        Preset::Rpi => {
            let params = RpiParams { seed: config.seed, ..initial.rpi.clone() };
            let state = random_phase_state(&grid, &params, initial.rpi_backend, &config.evolution)?;
            match state {
                qgpe::initial::RpiState::Dense(f) => State::Dense(f),
                qgpe::initial::RpiState::Mps(s) => State::Mps(s),
            }
            .into_backend(config.backend, &config.evolution)?
        }
    };
    relax(state, config)
}

fn relax(state: State, config: &RunConfig) -> CliResult<State> {
    if config.initial.relax_time <= 0.0 {
        return Ok(state);
    }
    let imaginary =
        EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: config.initial.relax_time, ..config.evolution.clone() };
    Ok(match state {
        State::Mps(s) => {
            let options = ImaginaryTimeOptions { remove_ground_state: false, renormalize: false };
            State::Mps(imaginary_time_evolve(&s, &imaginary, options)?)
        }
        State::Dense(f) => {
            let options = DnsImaginaryOptions::default();
            State::Dense(dns_imaginary_time(&f, &imaginary, options)?)
        }
    })
}
