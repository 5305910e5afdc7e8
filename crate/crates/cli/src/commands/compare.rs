use std::path::{Path, PathBuf};

use clap::Args;
use qgpe::initial::DarkSoliton;
use qgpe::io::{save_csv, InfidelityRow};
use qgpe::mps::dense_infidelity;
use qgpe::{infidelity, TruncationPolicy};

use crate::config::{sha256_hex, Preset};
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, Manifest};
use crate::snapshot::{list_snapshots, Snapshot};

/// Infidelity between snapshots or trajectories.
///
/// * two snapshot files: one number;
/// * two or more run directories, ordered by increasing bond dimension:
///   the infidelity of each consecutive pair at matching snapshot times,
///   which is the self-convergence check for truncated runs;
/// * `--analytic` with one file or directory of a soliton run: the
///   infidelity against the exact travelling solution at each time.
#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Compare against the analytic dark soliton stored in the run configuration.
    #[arg(long)]
    pub analytic: bool,
    /// CSV output; a directory when more than one pair is compared.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Infidelity between two snapshots on grids of equal shape.
pub fn snapshot_infidelity(a: &Snapshot, b: &Snapshot) -> CliResult<f64> {
    if !a.grid().same_shape(b.grid()) {
        return Err(CliError::Config("snapshots live on grids of different shape".into()));
    }
    match (a, b) {
        (Snapshot::Mps { state: sa, .. }, Snapshot::Mps { state: sb, .. }) if sa.grid().slots() == sb.grid().slots() => {
            Ok(infidelity(sa, sb)?)
        }
        _ => Ok(dense_infidelity(a.dense()?.values(), b.dense()?.values())?),
    }
}

/// Infidelity against the exact soliton at the snapshot's time.
pub fn analytic_infidelity(snapshot: &Snapshot) -> CliResult<f64> {
    let config = snapshot
        .config()?
        .ok_or_else(|| CliError::Format("snapshot carries no run configuration to rebuild the soliton from".into()))?;
    if config.initial.preset != Preset::Soliton {
        return Err(CliError::Config("--analytic is only defined for soliton runs".into()));
    }
    let soliton = DarkSoliton::new(snapshot.grid().length(), config.initial.soliton)?;
    let t = snapshot.time();
    match snapshot {
        Snapshot::Mps { state, .. } => {
            let exact = soliton.mps(state.grid(), t, &TruncationPolicy::exact())?;
            Ok(infidelity(state, &exact)?)
        }
        Snapshot::Field { field, .. } => Ok(dense_infidelity(field.values(), soliton.dense(field.grid(), t)?.values())?),
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

/// Infidelity series of two trajectories at their common snapshot times.
pub fn trajectory_infidelity(a: &Path, b: &Path) -> CliResult<Vec<InfidelityRow>> {
    let mut rows = Vec::new();
    let others: Vec<Snapshot> = list_snapshots(b)?.iter().map(|p| Snapshot::load(p)).collect::<CliResult<_>>()?;
    for path in list_snapshots(a)? {
        let snap = Snapshot::load(&path)?;
        if let Some(other) = others.iter().find(|o| same_time(o.time(), snap.time())) {
            rows.push(InfidelityRow { t: snap.time(), infidelity: snapshot_infidelity(&snap, other)? });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Format(format!("{} and {} share no snapshot times", a.display(), b.display())));
    }
    Ok(rows)
}

fn max_of(rows: &[InfidelityRow]) -> f64 {
    rows.iter().map(|r| r.infidelity).fold(0.0, f64::max)
}

pub fn run(args: &CompareArgs) -> CliResult<()> {
    let description = format!("compare {:?} analytic={}", args.inputs, args.analytic);
    let mut manifest = Manifest::new("compare", sha256_hex(description.as_bytes()));
    let mut outputs: Vec<(PathBuf, Vec<InfidelityRow>)> = Vec::new();
    if args.analytic {
        for input in &args.inputs {
            let paths = if input.is_dir() { list_snapshots(input)? } else { vec![input.clone()] };
            let mut rows = Vec::new();
            for path in paths {
                let snap = Snapshot::load(&path)?;
                rows.push(InfidelityRow { t: snap.time(), infidelity: analytic_infidelity(&snap)? });
            }
            println!("{}: max infidelity vs analytic {:.6e}", input.display(), max_of(&rows));
            outputs.push((PathBuf::from(format!("analytic_{}.csv", outputs.len())), rows));
        }
    } else if args.inputs.len() < 2 {
        return Err(CliError::Config("compare needs two inputs, or --analytic".into()));
    } else if args.inputs.iter().all(|p| p.is_file()) {
        if args.inputs.len() != 2 {
            return Err(CliError::Config("compare takes exactly two snapshot files".into()));
        }
        let a = Snapshot::load(&args.inputs[0])?;
        let b = Snapshot::load(&args.inputs[1])?;
        let value = snapshot_infidelity(&a, &b)?;
        println!("infidelity {value:e}");
        outputs.push((PathBuf::from("pair_0.csv"), vec![InfidelityRow { t: a.time(), infidelity: value }]));
    } else if args.inputs.iter().all(|p| p.is_dir()) {
        for (k, pair) in args.inputs.windows(2).enumerate() {
            let rows = trajectory_infidelity(&pair[0], &pair[1])?;
            println!("{} vs {}: max infidelity {:.6e}", pair[0].display(), pair[1].display(), max_of(&rows));
            outputs.push((PathBuf::from(format!("pair_{k}.csv")), rows));
        }
    } else {
        return Err(CliError::Config("compare inputs must be all snapshot files or all run directories".into()));
    }

    if let Some(out) = &args.out {
        if outputs.len() == 1 {
            save_csv(out, &outputs[0].1)?;
            manifest.output(out.clone());
            manifest.write(&sidecar(out))?;
        } else {
            super::create_dir(out)?;
            for (name, rows) in &outputs {
                let path = out.join(name);
                save_csv(&path, rows)?;
                manifest.output(path);
            }
            manifest.write(&out.join("manifest.compare.json"))?;
        }
    }
    Ok(())
}
