use std::path::{Path, PathBuf};

use clap::Args;
use qgpe::dns::DnsSolver;
use qgpe::io::{save_csv, DiagnosticRow, ProfileRow, StepRow};
use qgpe::tdvp::{Evolver, StepReport};

use super::{create_dir, ConfigArgs, FanOutArgs};
use crate::analysis::analyze_field;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::fanout::fan_out;
use crate::manifest::Manifest;
use crate::snapshot::Snapshot;
use crate::state::{build_initial, snapshot_params, State, StateRow};

/// Evolve a state in real time, writing snapshots and time series.
///
/// The configuration comes from `--config`, `--preset`, `<RUN_DIR>/run.toml`
/// or, failing those, the one stored in the input snapshot. `t_final` is the
/// duration of this call, counted from the input snapshot's time.
#[derive(Args, Debug)]
pub struct EvolveArgs {
    /// Directory written by `init`; supplies `run.toml` and `initial.*`.
    pub run_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Starting snapshot; a fresh initial state is built when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (defaults to RUN_DIR, then `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fanout: FanOutArgs,
}

/// Step indices (0 included) at which snapshots are written.
pub fn snapshot_steps(n_steps: usize, dt: f64, interval: f64) -> Vec<usize> {
    let mut steps = vec![0];
    if interval > 0.0 {
        let mut k = 1.0;
        loop {
            let step = (k * interval / dt).round() as usize;
            if step >= n_steps {
                break;
            }
            if step > *steps.last().unwrap() {
                steps.push(step);
            }
            k += 1.0;
        }
    }
    if n_steps > 0 {
        steps.push(n_steps);
    }
    steps
}

fn find_initial(dir: &Path) -> Option<PathBuf> {
    ["initial.qmps", "initial.qfld"].iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

pub fn run(args: &EvolveArgs) -> CliResult<()> {
    let input = args.input.clone().or_else(|| args.run_dir.as_deref().and_then(find_initial));
    let snapshot = input.as_deref().map(Snapshot::load).transpose()?;
    let fallback = args.run_dir.as_ref().map(|d| d.join("run.toml"));
    let mut config = match args.config.resolve(fallback.as_deref())? {
        Some(c) => c,
        None => {
            let stored = snapshot.as_ref().map(|s| s.config()).transpose()?.flatten().ok_or_else(|| {
                CliError::Config("no configuration: pass --config, --preset, a run directory or a snapshot from init".into())
            })?;
            RunConfig::from_toml(&stored.to_toml()?, &args.config.overrides)?
        }
    };
    let out = args.out.clone().or_else(|| args.run_dir.clone()).unwrap_or_else(|| config.output.directory.clone());
    if args.fanout.active() {
        return fan_out(&out, &args.fanout.seeds(config.seed)?);
    }
    create_dir(&out)?;
    config.output.directory = out.clone();
    let mut manifest = Manifest::new("evolve", config.hash()?);
    manifest.seed = Some(config.seed);

    let grid = config.grid.build()?;
    let (state, t0) = match snapshot {
        Some(s) => {
            if !s.grid().same_shape(&grid) {
                return Err(CliError::Config("input snapshot grid does not match grid configuration".into()));
            }
            let t0 = s.time();
            (State::from_snapshot(s), t0)
        }
        None => (manifest.time("build", || build_initial(&config))?, 0.0),
    };
    let mut state = state.into_backend(config.backend, &config.evolution)?;
    let toml_path = out.join("run.toml");
    std::fs::write(&toml_path, config.to_toml()?)?;
    manifest.output(toml_path);

    let mut series = Series::default();
    let started = std::time::Instant::now();
    let result = integrate(&config, &mut state, t0, &out, &mut series);
    manifest.wall_ms.insert("evolve".into(), started.elapsed().as_secs_f64() * 1e3);

    // Partial series are kept when the integration fails.
    let steps_path = out.join("steps.csv");
    save_csv(&steps_path, &series.steps)?;
    manifest.output(steps_path);
    let state_path = out.join("state.csv");
    save_csv(&state_path, &series.states)?;
    manifest.output(state_path);
    if !config.output.diagnostics.is_empty() {
        let path = out.join("diagnostics.csv");
        save_csv(&path, &series.diagnostics)?;
        manifest.output(path);
    }
    if !series.profile.is_empty() {
        let path = out.join("profile.csv");
        save_csv(&path, &series.profile)?;
        manifest.output(path);
    }
    manifest.outputs.extend(series.snapshots);
    manifest.write(&out.join("manifest.evolve.json"))?;
    result
}

#[derive(Default)]
struct Series {
    steps: Vec<StepRow>,
    states: Vec<StateRow>,
    diagnostics: Vec<DiagnosticRow>,
    profile: Vec<ProfileRow>,
    snapshots: Vec<PathBuf>,
}

enum Stepper {
    Mps(Evolver),
    Dns(DnsSolver),
}

fn integrate(config: &RunConfig, state: &mut State, t0: f64, out: &Path, series: &mut Series) -> CliResult<()> {
    let evolution = &config.evolution;
    let grid = config.grid.build()?;
    let mut stepper = match state {
        State::Mps(_) => {
            let mut e = Evolver::new(&grid, evolution.clone())?;
            e.set_time(t0);
            Stepper::Mps(e)
        }
        State::Dense(_) => {
            let mut d = DnsSolver::new(&grid, evolution.clone())?;
            d.set_time(t0);
            Stepper::Dns(d)
        }
    };
    let n_steps = evolution.n_steps();
    let marks = snapshot_steps(n_steps, evolution.dt, config.output.snapshot_interval);
    let params = snapshot_params(config)?;
    let background = evolution.background_density();
    let record = |index: usize, t: f64, state: &State, series: &mut Series| -> CliResult<()> {
        let path = state.save(out, &format!("snap_{index:05}"), t, params.clone())?;
        series.snapshots.push(path);
        series.states.push(state.summary(t));
        if !config.output.diagnostics.is_empty() {
            let field = state.dense()?;
            let row = analyze_field(&field, t, background, &config.output.diagnostics, out, index, &mut series.profile)?;
            series.diagnostics.push(row);
        }
        log::info!("t = {t:.4}: snapshot {index}");
        Ok(())
    };
    record(0, t0, state, series)?;
    let mut next_mark = 1;
    for step in 1..=n_steps {
        let report: StepReport = match (&mut stepper, &mut *state) {
            (Stepper::Mps(e), State::Mps(s)) => {
                let (next, report) = e.step(s)?;
                *s = next;
                report
            }
            (Stepper::Dns(d), State::Dense(f)) => d.step(f)?,
            _ => unreachable!("stepper and state share a backend"),
        };
        let mut row = StepRow::from(&report);
        if !config.output.record_wall_time {
            row.wall_ms = 0.0;
        }
        series.steps.push(row);
        if !report.norm.is_finite() {
            return Err(CliError::Numerical(format!("norm became {} at step {step}", report.norm)));
        }
        if marks.get(next_mark) == Some(&step) {
            record(next_mark, report.time, state, series)?;
            next_mark += 1;
        }
    }
    Ok(())
}
