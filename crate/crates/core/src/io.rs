//! Snapshot files and CSV tables.
//!
//! Binary containers share one layout: an 8-byte magic, a little-endian
//! `u64` header length, a UTF-8 JSON header, then complex128 values as
//! interleaved little-endian `(re, im)` pairs. `QMPS0001` holds MPS (or MPO)
//! tensors in chain order, each row-major; `QFLD0001` holds a dense field in
//! row-major grid order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, Array4};
use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dns::DenseField;
use crate::error::{QgpeError, Result};
use crate::grid::QuanticsGrid;
use crate::mpo::MpoOperator;
use crate::mps::MpsState;
use crate::tdvp::StepReport;

pub const MPS_MAGIC: &[u8; 8] = b"QMPS0001";
pub const FIELD_MAGIC: &[u8; 8] = b"QFLD0001";

/// Headers larger than this are treated as corrupt.
const MAX_HEADER_BYTES: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub grid: QuanticsGrid,
    /// True when the payload holds rank-4 operator tensors.
    #[serde(default)]
    pub mpo: bool,
    pub bond_dims: Vec<usize>,
    pub shapes: Vec<Vec<usize>>,
    pub time: f64,
    /// Free-form physical parameters (μ, g, γ, ...).
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: QuanticsGrid,
    pub shape: Vec<usize>,
    pub time: f64,
    #[serde(default)]
    pub params: serde_json::Value,
}

fn write_container<W: Write, H: Serialize>(mut w: W, magic: &[u8; 8], header: &H, payload: impl Iterator<Item = C64>) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for z in payload {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: Read, H: DeserializeOwned>(r: &mut R, magic: &[u8; 8]) -> Result<H> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m).map_err(|_| QgpeError::Format("file too short for a magic number".into()))?;
    if &m != magic {
        return Err(QgpeError::Format(format!(
            "unknown magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| QgpeError::Format("truncated header length".into()))?;
    let len = u64::from_le_bytes(len);
    if len > MAX_HEADER_BYTES {
        return Err(QgpeError::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| QgpeError::Format("truncated header".into()))?;
    serde_json::from_slice(&json).map_err(|e| QgpeError::Format(format!("bad header: {e}")))
}

fn read_values<R: Read>(r: &mut R, count: usize) -> Result<Vec<C64>> {
    let mut buf = vec![0u8; 16 * count];
    r.read_exact(&mut buf).map_err(|_| QgpeError::Format("truncated payload".into()))?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

fn expect_end<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(QgpeError::Format("trailing bytes after payload".into())),
    }
}

pub fn write_mps<W: Write>(w: W, state: &MpsState, time: f64, params: serde_json::Value) -> Result<()> {
    let header = SnapshotHeader {
        grid: state.grid().clone(),
        mpo: false,
        bond_dims: state.bond_dims(),
        shapes: state.tensors().iter().map(|t| t.shape().to_vec()).collect(),
        time,
        params,
    };
    let payload = state.tensors().iter().flat_map(|t| t.iter().copied().collect::<Vec<_>>());
    write_container(w, MPS_MAGIC, &header, payload)
}

fn checked_grid(grid: QuanticsGrid, shapes: &[Vec<usize>], rank: usize) -> Result<QuanticsGrid> {
    let grid = grid.validated().map_err(|e| QgpeError::Format(format!("bad grid in header: {e}")))?;
    if shapes.len() != grid.n_sites() || shapes.iter().any(|s| s.len() != rank) {
        return Err(QgpeError::Format("tensor shapes do not match the grid".into()));
    }
    Ok(grid)
}

pub fn read_mps<R: Read>(mut r: R) -> Result<(MpsState, SnapshotHeader)> {
    let header: SnapshotHeader = read_header(&mut r, MPS_MAGIC)?;
    if header.mpo {
        return Err(QgpeError::Format("file holds an operator, not a state".into()));
    }
    let grid = checked_grid(header.grid.clone(), &header.shapes, 3)?;
    let mut tensors = Vec::with_capacity(header.shapes.len());
    for s in &header.shapes {
        let values = read_values(&mut r, s.iter().product())?;
        tensors.push(Array3::from_shape_vec((s[0], s[1], s[2]), values).expect("size checked"));
    }
    expect_end(&mut r)?;
    let state = MpsState::from_tensors(grid, tensors).map_err(|e| QgpeError::Format(e.to_string()))?;
    Ok((state, header))
}

pub fn write_mpo<W: Write>(w: W, op: &MpoOperator, params: serde_json::Value) -> Result<()> {
    let header = SnapshotHeader {
        grid: op.grid().clone(),
        mpo: true,
        bond_dims: op.bond_dims(),
        shapes: op.tensors().iter().map(|t| t.shape().to_vec()).collect(),
        time: 0.0,
        params,
    };
    let payload = op.tensors().iter().flat_map(|t| t.iter().copied().collect::<Vec<_>>());
    write_container(w, MPS_MAGIC, &header, payload)
}

pub fn read_mpo<R: Read>(mut r: R) -> Result<(MpoOperator, SnapshotHeader)> {
    let header: SnapshotHeader = read_header(&mut r, MPS_MAGIC)?;
    if !header.mpo {
        return Err(QgpeError::Format("file holds a state, not an operator".into()));
    }
    let grid = checked_grid(header.grid.clone(), &header.shapes, 4)?;
    let mut tensors = Vec::with_capacity(header.shapes.len());
    for s in &header.shapes {
        let values = read_values(&mut r, s.iter().product())?;
        tensors.push(Array4::from_shape_vec((s[0], s[1], s[2], s[3]), values).expect("size checked"));
    }
    expect_end(&mut r)?;
    let op = MpoOperator::from_tensors(grid, tensors).map_err(|e| QgpeError::Format(e.to_string()))?;
    Ok((op, header))
}

pub fn write_field<W: Write>(w: W, field: &DenseField, time: f64, params: serde_json::Value) -> Result<()> {
    let header = FieldHeader { grid: field.grid().clone(), shape: field.shape(), time, params };
    write_container(w, FIELD_MAGIC, &header, field.values().iter().copied())
}

pub fn read_field<R: Read>(mut r: R) -> Result<(DenseField, FieldHeader)> {
    let header: FieldHeader = read_header(&mut r, FIELD_MAGIC)?;
    let grid = header.grid.clone().validated().map_err(|e| QgpeError::Format(format!("bad grid in header: {e}")))?;
    if grid.shape() != header.shape {
        return Err(QgpeError::Format("field shape does not match its grid".into()));
    }
    let values = read_values(&mut r, header.shape.iter().product())?;
    expect_end(&mut r)?;
    let field = DenseField::new(grid, values).map_err(|e| QgpeError::Format(e.to_string()))?;
    Ok((field, header))
}

pub fn save_mps(path: &Path, state: &MpsState, time: f64, params: serde_json::Value) -> Result<()> {
    write_mps(BufWriter::new(File::create(path)?), state, time, params)
}

pub fn load_mps(path: &Path) -> Result<(MpsState, SnapshotHeader)> {
    read_mps(BufReader::new(File::open(path)?))
}

pub fn save_field(path: &Path, field: &DenseField, time: f64, params: serde_json::Value) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field, time, params)
}

pub fn load_field(path: &Path) -> Result<(DenseField, FieldHeader)> {
    read_field(BufReader::new(File::open(path)?))
}

/// One row of the step-report time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: f64,
    pub norm: f64,
    pub chi_max: usize,
    pub discarded_weight: f64,
    pub wall_ms: f64,
}

impl From<&StepReport> for StepRow {
    fn from(r: &StepReport) -> Self {
        StepRow { t: r.time, norm: r.norm, chi_max: r.max_bond, discarded_weight: r.discarded_weight, wall_ms: r.wall_ms }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: f64,
    #[serde(rename = "E_KI_k")]
    pub e_ki: f64,
    #[serde(rename = "E_KC_k")]
    pub e_kc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    #[serde(rename = "N_vortex")]
    pub n_vortex: f64,
    #[serde(rename = "E_KI")]
    pub e_ki: f64,
    #[serde(rename = "E_KC")]
    pub e_kc: f64,
    pub rho_soliton: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub l: f64,
    pub g: f64,
}

/// Infidelity of one trajectory against a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfidelityRow {
    pub t: f64,
    pub infidelity: f64,
}

/// Long-format density profile sample, for space-time heatmaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: f64,
    pub x: f64,
    pub rho: f64,
}

pub fn write_csv<T: Serialize, W: Write>(w: W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(QgpeError::from)).collect()
}

pub fn save_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), rows)
}

pub fn load_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_csv(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScaleOrdering;
    use crate::mps::infidelity;

    fn grid() -> QuanticsGrid {
        QuanticsGrid::new(2, 3, 4.0, ScaleOrdering::stair()).unwrap()
    }

    #[test]
    fn mps_round_trip_is_exact() {
        let state = MpsState::random(grid(), 4, 2);
        let mut buf = Vec::new();
        write_mps(&mut buf, &state, 1.5, serde_json::json!({"gamma": 0.01})).unwrap();
        assert_eq!(&buf[..8], MPS_MAGIC);
        let (back, header) = read_mps(buf.as_slice()).unwrap();
        assert_eq!(back.tensors(), state.tensors());
        assert_eq!(header.time, 1.5);
        assert_eq!(header.bond_dims, state.bond_dims());
        assert!(infidelity(&back, &state).unwrap() < 1e-14);
    }

    #[test]
    fn header_layout() {
        let state = MpsState::ones(grid());
        let mut buf = Vec::new();
        write_mps(&mut buf, &state, 0.0, serde_json::Value::Null).unwrap();
        let len = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&buf[16..16 + len]).unwrap();
        assert_eq!(header["mpo"], false);
        assert_eq!(buf.len(), 16 + len + 16 * 6 * 2);
        // First payload value is 1 + 0i.
        assert_eq!(f64::from_le_bytes(buf[16 + len..24 + len].try_into().unwrap()), 1.0);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let state = MpsState::random(grid(), 2, 1);
        let mut buf = Vec::new();
        write_mps(&mut buf, &state, 0.0, serde_json::Value::Null).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_mps(bad.as_slice()), Err(QgpeError::Format(_))));
        assert!(matches!(read_mps(&buf[..buf.len() - 3]), Err(QgpeError::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_mps(long.as_slice()), Err(QgpeError::Format(_))));
        assert!(matches!(read_field(buf.as_slice()), Err(QgpeError::Format(_))));
        assert!(matches!(read_mpo(buf.as_slice()), Err(QgpeError::Format(_))));
    }

    #[test]
    fn mpo_and_field_round_trips() {
        let g = QuanticsGrid::new(2, 4, 4.0, ScaleOrdering::stair()).unwrap();
        let op = MpoOperator::laplacian_default(&g).unwrap();
        let mut buf = Vec::new();
        write_mpo(&mut buf, &op, serde_json::Value::Null).unwrap();
        let (back, header) = read_mpo(buf.as_slice()).unwrap();
        assert!(header.mpo);
        assert_eq!(back.tensors(), op.tensors());
        assert!(matches!(read_mps(buf.as_slice()), Err(QgpeError::Format(_))));

        let field = DenseField::from_fn(g, |x| C64::new(x[0], -x[1])).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &field, 2.0, serde_json::json!({"preset": "test"})).unwrap();
        assert_eq!(&buf[..8], FIELD_MAGIC);
        let (back, header) = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, field);
        assert_eq!(header.shape, vec![16, 16]);
    }

    #[test]
    fn csv_columns() {
        let rows = [StepRow { t: 0.5, norm: 1.0, chi_max: 4, discarded_weight: 0.0, wall_ms: 1.25 }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,norm,chi_max,discarded_weight,wall_ms");
        assert_eq!(read_csv::<StepRow, _>(buf.as_slice()).unwrap(), rows);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[SpectrumRow { k: 1.0, e_ki: 2.0, e_kc: 3.0 }]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k,E_KI_k,E_KC_k"));
        let mut buf = Vec::new();
        write_csv(&mut buf, &[DiagnosticRow { t: 0.0, n_vortex: 2.0, e_ki: 1.0, e_kc: 0.5, rho_soliton: 0.0 }]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,N_vortex,E_KI,E_KC,rho_soliton"));
    }
}
