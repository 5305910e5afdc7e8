use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qgpe::diagnostics::{plane_projection, region_slice, SubBox};
use qgpe::dns::DenseField;
use qgpe::io::save_field;
use qgpe::{QuanticsGrid, ScaleOrdering};

use crate::config::sha256_hex;
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, Manifest};
use crate::snapshot::Snapshot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    /// The axis orthogonal to the plane.
    fn normal(self) -> usize {
        match self {
            Plane::Xy => 2,
            Plane::Xz => 1,
            Plane::Yz => 0,
        }
    }
}

/// Densify a snapshot, or a plane or dyadic sub-box of it.
///
/// `--dense` and `--plane` write a QFLD field; `--region` writes a CSV with
/// one row per sample (`x`, `y`, `z` coordinates, `re`, `im`).
#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["dense", "plane", "levels"])))]
pub struct ExportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// The whole field (refused beyond 2^27 points).
    #[arg(long)]
    pub dense: bool,
    /// A plane of a 3D state, sliced at `--at` along the normal axis.
    #[arg(long, value_enum)]
    pub plane: Option<Plane>,
    /// Grid index of the slice along the normal (defaults to the middle).
    #[arg(long, requires = "plane")]
    pub at: Option<usize>,
    /// Sum ψ along the normal instead of slicing.
    #[arg(long, requires = "plane", conflicts_with = "at")]
    pub sum: bool,
    /// Coarse qubits fixed per axis for a sub-box export.
    #[arg(long, value_delimiter = ',', requires = "blocks")]
    pub levels: Vec<usize>,
    /// Block index per axis at the fixed level.
    #[arg(long, value_delimiter = ',', requires = "levels")]
    pub blocks: Vec<usize>,
}

fn plane_field(snapshot: &Snapshot, plane: Plane, at: Option<usize>, sum: bool) -> CliResult<DenseField> {
    let grid = snapshot.grid();
    if grid.dims() != 3 || !grid.is_uniform() {
        return Err(CliError::Config("plane export needs a 3D snapshot with equal qubits per axis".into()));
    }
    let normal = plane.normal();
    let n = grid.n();
    let plane_grid = QuanticsGrid::new(2, n, grid.length(), ScaleOrdering::sequential())?;
    if sum {
        let projected = match snapshot {
            Snapshot::Mps { state, .. } => plane_projection(state, normal)?,
            Snapshot::Field { field, .. } => {
                let mut values = vec![qgpe::C64::new(0.0, 0.0); 1 << (2 * n)];
                for (idx, z) in field.values().iter().enumerate() {
                    let coords = unravel(idx, n);
                    let kept: Vec<usize> = (0..3).filter(|&a| a != normal).map(|a| coords[a]).collect();
                    values[(kept[0] << n) | kept[1]] += z;
                }
                DenseField::new(plane_grid.clone(), values)?
            }
        };
        return Ok(DenseField::new(plane_grid, projected.into_values())?);
    }
    let index = at.unwrap_or(1 << (n - 1));
    if index >= 1 << n {
        return Err(CliError::Config(format!("slice index {index} is outside the grid (2^{n} points per axis)")));
    }
    let values = match snapshot {
        Snapshot::Mps { state, .. } => {
            let mut levels = vec![0; 3];
            let mut blocks = vec![0; 3];
            levels[normal] = n;
            blocks[normal] = index;
            region_slice(state, &SubBox { levels, blocks })?.values
        }
        Snapshot::Field { field, .. } => field
            .values()
            .iter()
            .enumerate()
            .filter(|(idx, _)| unravel(*idx, n)[normal] == index)
            .map(|(_, z)| *z)
            .collect(),
    };
    Ok(DenseField::new(plane_grid, values)?)
}

fn unravel(idx: usize, n: usize) -> [usize; 3] {
    let mask = (1 << n) - 1;
    [idx >> (2 * n), (idx >> n) & mask, idx & mask]
}

fn write_region(args: &ExportArgs, snapshot: &Snapshot) -> CliResult<()> {
    let Snapshot::Mps { state, .. } = snapshot else {
        return Err(CliError::Config("region export reads MPS snapshots; use --dense for fields".into()));
    };
    let region = SubBox { levels: args.levels.clone(), blocks: args.blocks.clone() };
    let slice = region_slice(state, &region)?;
    let grid = state.grid();
    let names = ["x", "y", "z"];
    let mut writer = csv::Writer::from_path(&args.out).map_err(|e| CliError::Other(e.to_string()))?;
    let mut header: Vec<&str> = names[..grid.dims()].to_vec();
    header.extend(["re", "im"]);
    writer.write_record(&header).map_err(|e| CliError::Other(e.to_string()))?;
    let total: usize = slice.shape.iter().product();
    for flat in 0..total {
        let mut rest = flat;
        let mut local = vec![0; grid.dims()];
        for a in (0..grid.dims()).rev() {
            local[a] = rest % slice.shape[a];
            rest /= slice.shape[a];
        }
        let mut record: Vec<String> =
            (0..grid.dims()).map(|a| ((slice.offset[a] + local[a]) as f64 * grid.spacing(a)).to_string()).collect();
        let z = slice.values[flat];
        record.push(z.re.to_string());
        record.push(z.im.to_string());
        writer.write_record(&record).map_err(|e| CliError::Other(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn run(args: &ExportArgs) -> CliResult<()> {
    let snapshot = Snapshot::load(&args.input)?;
    let description = format!("{args:?}");
    let mut manifest = Manifest::new("export", sha256_hex(description.as_bytes()));
    let t = snapshot.time();
    let params = snapshot.params().clone();
    if args.dense {
        let field = manifest.time("densify", || snapshot.dense())?;
        save_field(&args.out, &field, t, params)?;
    } else if let Some(plane) = args.plane {
        let field = manifest.time("plane", || plane_field(&snapshot, plane, args.at, args.sum))?;
        save_field(&args.out, &field, t, params)?;
    } else {
        manifest.time("region", || write_region(args, &snapshot))?;
    }
    println!("wrote {}", args.out.display());
    manifest.output(args.out.clone());
    manifest.write(&sidecar(&args.out))
}
