//! Snapshots of either kind, recognised by their magic bytes.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use qgpe::dns::DenseField;
use qgpe::io::{read_field, read_mps, FieldHeader, SnapshotHeader, FIELD_MAGIC, MPS_MAGIC};
use qgpe::{MpsState, QuanticsGrid};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub enum Snapshot {
    Mps { state: MpsState, header: SnapshotHeader },
    Field { field: DenseField, header: FieldHeader },
}

impl Snapshot {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::Format(format!("cannot open {}: {e}", path.display())))?;
        let mut reader = BufReader::new(file);
        let mut magic = [0u8; 8];
        reader
            .read_exact(&mut magic)
            .map_err(|_| CliError::Format(format!("{} is too short to be a snapshot", path.display())))?;
        let chained = std::io::Cursor::new(magic).chain(reader);
        let context = |e: qgpe::QgpeError| match CliError::from(e) {
            CliError::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
            other => other,
        };
        if &magic == MPS_MAGIC {
            let (state, header) = read_mps(chained).map_err(context)?;
            Ok(Snapshot::Mps { state, header })
        } else if &magic == FIELD_MAGIC {
            let (field, header) = read_field(chained).map_err(context)?;
            Ok(Snapshot::Field { field, header })
        } else {
            Err(CliError::Format(format!("{} has unknown magic {:?}", path.display(), String::from_utf8_lossy(&magic))))
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Snapshot::Mps { header, .. } => header.time,
            Snapshot::Field { header, .. } => header.time,
        }
    }

    pub fn params(&self) -> &serde_json::Value {
        match self {
            Snapshot::Mps { header, .. } => &header.params,
            Snapshot::Field { header, .. } => &header.params,
        }
    }

    pub fn grid(&self) -> &QuanticsGrid {
        match self {
            Snapshot::Mps { state, .. } => state.grid(),
            Snapshot::Field { field, .. } => field.grid(),
        }
    }

    /// The run configuration stored by `init`/`evolve`, if any.
    pub fn config(&self) -> CliResult<Option<RunConfig>> {
        match self.params().get("config") {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Format(format!("stored run configuration is unreadable: {e}"))),
        }
    }

    /// Background density `μ/g` from the stored configuration, else 1.
    pub fn background(&self) -> CliResult<f64> {
        Ok(self.config()?.map(|c| c.evolution.background_density()).unwrap_or(1.0))
    }

    /// Dense samples, subject to the dense size cap.
    pub fn dense(&self) -> CliResult<DenseField> {
        match self {
            Snapshot::Mps { state, .. } => Ok(DenseField::from_mps(state)?),
            Snapshot::Field { field, .. } => Ok(field.clone()),
        }
    }
}

pub fn is_snapshot_path(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("qmps" | "qfld"))
}

/// Snapshot files of a run directory, sorted by name (and so by index).
/// Numbered `snap_*` files take precedence over anything else.
pub fn list_snapshots(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Format(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_snapshot_path(p))
        .collect();
    paths.sort();
    // A run directory also holds the `init` output, which duplicates snapshot 0.
    let is_numbered = |p: &PathBuf| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("snap_"));
    if paths.iter().any(is_numbered) {
        paths.retain(is_numbered);
    }
    if paths.is_empty() {
        return Err(CliError::Format(format!("{} holds no .qmps or .qfld snapshots", dir.display())));
    }
    Ok(paths)
}

/// A single snapshot file, or every snapshot in a directory.
pub fn expand_inputs(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_dir() {
        list_snapshots(path)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}
