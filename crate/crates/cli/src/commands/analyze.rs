use std::path::PathBuf;

use clap::Args;
use qgpe::io::save_csv;
use serde::Serialize;

use super::create_dir;
use crate::analysis::analyze_field;
use crate::config::{sha256_hex, Diagnostic};
use crate::error::CliResult;
use crate::manifest::Manifest;
use crate::snapshot::{expand_inputs, Snapshot};

/// Diagnostics of a snapshot or of every snapshot in a run directory.
///
/// Writes `diagnostics.csv`, per-snapshot spectra and correlations, 1D
/// density profiles, and for MPS inputs the bond dimensions and Schmidt
/// entropies in `bonds.csv`.
#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Snapshot file or run directory.
    pub input: PathBuf,
    /// Diagnostics to compute (defaults to the run's list, else all that
    /// apply in the snapshot's dimension).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub diagnostics: Vec<Diagnostic>,
    /// Background density `μ/g` (defaults to the stored configuration).
    #[arg(long)]
    pub background: Option<f64>,
    /// Output directory (defaults to `<run dir>/analysis`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BondRow {
    t: f64,
    bond: usize,
    chi: usize,
    entropy: f64,
}

fn default_diagnostics(dims: usize) -> Vec<Diagnostic> {
    match dims {
        1 => vec![Diagnostic::SolitonDensity, Diagnostic::Correlation, Diagnostic::Profile],
        2 => vec![Diagnostic::Vortices, Diagnostic::Energies, Diagnostic::Spectra, Diagnostic::Correlation],
        _ => vec![Diagnostic::Vortices, Diagnostic::Energies],
    }
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let inputs = expand_inputs(&args.input)?;
    let base = if args.input.is_dir() { args.input.clone() } else { args.input.parent().map(PathBuf::from).unwrap_or_default() };
    let out = args.out.clone().unwrap_or_else(|| base.join("analysis"));
    create_dir(&out)?;
    let description = format!("analyze {:?} {:?} {:?}", inputs, args.diagnostics, args.background);
    let mut manifest = Manifest::new("analyze", sha256_hex(description.as_bytes()));

    let mut rows = Vec::new();
    let mut profile = Vec::new();
    let mut bonds = Vec::new();
    for (index, path) in inputs.iter().enumerate() {
        let snapshot = Snapshot::load(path)?;
        let t = snapshot.time();
        let stored = snapshot.config()?;
        let diagnostics = if !args.diagnostics.is_empty() {
            args.diagnostics.clone()
        } else {
            match stored.as_ref().map(|c| c.output.diagnostics.clone()) {
                Some(list) if !list.is_empty() => list,
                _ => default_diagnostics(snapshot.grid().dims()),
            }
        };
        let background = match args.background {
            Some(b) => b,
            None => snapshot.background()?,
        };
        if let Snapshot::Mps { state, .. } = &snapshot {
            let entropies = state.schmidt_spectrum()?.entropies();
            let dims = state.bond_dims();
            bonds.extend(
                entropies.iter().enumerate().map(|(bond, &entropy)| BondRow { t, bond, chi: dims[bond], entropy }),
            );
        }
        let field = snapshot.dense()?;
        rows.push(analyze_field(&field, t, background, &diagnostics, &out, index, &mut profile)?);
    }
    let path = out.join("diagnostics.csv");
    save_csv(&path, &rows)?;
    manifest.output(path);
    if !profile.is_empty() {
        let path = out.join("profile.csv");
        save_csv(&path, &profile)?;
        manifest.output(path);
    }
    if !bonds.is_empty() {
        let path = out.join("bonds.csv");
        save_csv(&path, &bonds)?;
        manifest.output(path);
    }
    println!("analyzed {} snapshot(s) into {}", inputs.len(), out.display());
    manifest.write(&out.join("manifest.analyze.json"))
}
