//! Measured quantities: excitation densities, Madelung/Helmholtz
//! decomposition, kinetic energies and spectra, two-point correlations,
//! and planes or sub-boxes of an MPS contracted without densifying the box.

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dns::{DenseField, DENSE_POINT_CAP};
use crate::error::{QgpeError, Result};
use crate::fourier::{wavevectors, FftNd};
use crate::grid::{QuanticsGrid, ScaleOrdering, Slot};
use crate::mps::MpsState;

/// Points with `ρ` at or below `VELOCITY_THRESHOLD · λ` get zero velocity.
pub const VELOCITY_THRESHOLD: f64 = 1e-10;

fn row_major_index(shape: &[usize], mut r: usize) -> Vec<usize> {
    let mut idx = vec![0usize; shape.len()];
    for axis in (0..shape.len()).rev() {
        idx[axis] = r % shape[axis];
        r /= shape[axis];
    }
    idx
}

fn flat(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i % n)
}

/// `(1/L)∫(1 − |ψ|²/λ)/2 dx` by the rectangle rule.
pub fn soliton_density(field: &DenseField, background: f64) -> Result<f64> {
    if field.grid().dims() != 1 {
        return Err(QgpeError::Argument("soliton density needs a 1D field".into()));
    }
    let mean: f64 = field.values().iter().map(|z| 0.5 * (1.0 - z.norm_sqr() / background)).sum::<f64>()
        / field.values().len() as f64;
    Ok(mean)
}

/// Winding (in units of 2π) around the plaquette spanned by `axes` at `idx`,
/// and whether any corner has exactly zero amplitude.
fn plaquette(values: &[C64], shape: &[usize], idx: &[usize], axes: (usize, usize)) -> (i32, bool) {
    let mut corner = idx.to_vec();
    let mut ring = [C64::new(0.0, 0.0); 4];
    for (c, (da, db)) in [(0, 0), (1, 0), (1, 1), (0, 1)].into_iter().enumerate() {
        corner[axes.0] = idx[axes.0] + da;
        corner[axes.1] = idx[axes.1] + db;
        ring[c] = values[flat(shape, &corner)];
    }
    let flagged = ring.iter().any(|z| z.norm_sqr() == 0.0);
    let total: f64 = (0..4).map(|c| (ring[(c + 1) % 4] * ring[c].conj()).arg()).sum();
    ((total / (2.0 * std::f64::consts::PI)).round() as i32, flagged)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexCount {
    /// Plaquette centres with winding +1 and −1 (larger windings are repeated).
    pub positive: Vec<[f64; 2]>,
    pub negative: Vec<[f64; 2]>,
    /// Plaquettes with a corner of exactly zero amplitude.
    pub flagged: usize,
    pub area: f64,
}

impl VortexCount {
    pub fn total(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn net(&self) -> i64 {
        self.positive.len() as i64 - self.negative.len() as i64
    }

    /// Vortices per unit area.
    pub fn density(&self) -> f64 {
        self.total() as f64 / self.area
    }
}

pub fn count_vortices_2d(field: &DenseField) -> Result<VortexCount> {
    let grid = field.grid();
    if grid.dims() != 2 {
        return Err(QgpeError::Argument("2D vortex counting needs a 2D field".into()));
    }
    let shape = field.shape();
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let mut out = VortexCount { area: grid.volume(), ..Default::default() };
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            let (w, flagged) = plaquette(field.values(), &shape, &[i, j], (0, 1));
            out.flagged += flagged as usize;
            let centre = [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy];
            for _ in 0..w.unsigned_abs() {
                if w > 0 {
                    out.positive.push(centre);
                } else {
                    out.negative.push(centre);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexLines {
    /// Plaquettes of all three orientations with non-zero winding.
    pub pierced: usize,
    /// `pierced · h`; for a curve this measures its taxicab length.
    pub length: f64,
    /// Line length per unit volume.
    pub density: f64,
    pub flagged: usize,
}

pub fn vortex_line_density_3d(field: &DenseField) -> Result<VortexLines> {
    let grid = field.grid();
    if grid.dims() != 3 {
        return Err(QgpeError::Argument("vortex line density needs a 3D field".into()));
    }
    let shape = field.shape();
    let mut out = VortexLines::default();
    for r in 0..field.values().len() {
        let idx = row_major_index(&shape, r);
        for axes in [(0, 1), (1, 2), (2, 0)] {
            let (w, flagged) = plaquette(field.values(), &shape, &idx, axes);
            out.pierced += w.unsigned_abs() as usize;
            out.flagged += flagged as usize;
        }
    }
    out.length = out.pierced as f64 * grid.spacing(0);
    out.density = out.length / grid.volume();
    Ok(out)
}

/// Madelung fields and the Helmholtz split of the pseudo-velocity, each
/// vector field stored component-major over row-major points.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityFields {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub velocity: Vec<Vec<f64>>,
    pub pseudo: Vec<Vec<f64>>,
    pub incompressible: Vec<Vec<f64>>,
    pub compressible: Vec<Vec<f64>>,
    cell_volume: f64,
}

impl VelocityFields {
    /// `(E_KI, E_KC)` with unit mass.
    pub fn kinetic_energies(&self) -> (f64, f64) {
        let energy = |w: &[Vec<f64>]| 0.5 * self.cell_volume * w.iter().flatten().map(|x| x * x).sum::<f64>();
        (energy(&self.incompressible), energy(&self.compressible))
    }
}

/// Incompressible and compressible parts of a vector field by Fourier
/// projection; the `k = 0` mode goes to the incompressible part.
///
/// A Nyquist component has no distinct mirror mode, so it is taken as zero
/// inside the projector; this keeps both parts real and orthogonal.
pub fn helmholtz_split(w: &[Vec<f64>], shape: &[usize], length: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let fft = FftNd::new(shape);
    let nyquist: Vec<f64> = shape.iter().map(|&n| -std::f64::consts::PI * n as f64 / length).collect();
    let ks: Vec<Vec<f64>> = wavevectors(shape, length)
        .into_iter()
        .map(|k| k.iter().zip(&nyquist).map(|(&c, &q)| if c == q { 0.0 } else { c }).collect())
        .collect();
    let mut hats: Vec<Vec<C64>> = w
        .iter()
        .map(|c| {
            let mut v: Vec<C64> = c.iter().map(|&x| C64::new(x, 0.0)).collect();
            fft.forward(&mut v);
            v
        })
        .collect();
    let d = w.len();
    let mut comp: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); hats[0].len()]; d];
    for (p, k) in ks.iter().enumerate() {
        let k2: f64 = k.iter().map(|c| c * c).sum();
        if k2 == 0.0 {
            continue;
        }
        let dot: C64 = (0..d).map(|a| hats[a][p] * k[a]).sum();
        for a in 0..d {
            comp[a][p] = dot * k[a] / k2;
            hats[a][p] -= comp[a][p];
        }
    }
    let back = |mut v: Vec<C64>| {
        fft.inverse(&mut v);
        v.into_iter().map(|z| z.re).collect::<Vec<f64>>()
    };
    (hats.into_iter().map(back).collect(), comp.into_iter().map(back).collect())
}

/// Spectral gradient of `field` along every axis.
fn gradient(field: &DenseField) -> Vec<Vec<C64>> {
    let shape = field.shape();
    let fft = FftNd::new(&shape);
    let ks = wavevectors(&shape, field.grid().length());
    let mut hat = field.values().to_vec();
    fft.forward(&mut hat);
    (0..shape.len())
        .map(|a| {
            let mut g: Vec<C64> = hat.iter().zip(&ks).map(|(z, k)| z * C64::new(0.0, k[a])).collect();
            fft.inverse(&mut g);
            g
        })
        .collect()
}

/// `w = Im(ψ*∇ψ)/√ρ` (zero where `ρ ≤ 1e-10·λ`) and its Helmholtz split.
pub fn madelung_helmholtz(field: &DenseField, background: f64) -> Result<VelocityFields> {
    let d = field.grid().dims();
    if !(2..=3).contains(&d) {
        return Err(QgpeError::Argument("the Helmholtz split needs a 2D or 3D field".into()));
    }
    let threshold = VELOCITY_THRESHOLD * background;
    let grad = gradient(field);
    let rho = field.density();
    let theta: Vec<f64> = field.values().iter().map(|z| z.arg()).collect();
    let mut velocity = vec![vec![0.0; rho.len()]; d];
    let mut pseudo = vec![vec![0.0; rho.len()]; d];
    for (p, (&r, psi)) in rho.iter().zip(field.values()).enumerate() {
        if r <= threshold {
            continue;
        }
        for a in 0..d {
            let current = (psi.conj() * grad[a][p]).im;
            velocity[a][p] = current / r;
            pseudo[a][p] = current / r.sqrt();
        }
    }
    let (incompressible, compressible) = helmholtz_split(&pseudo, &field.shape(), field.grid().length());
    Ok(VelocityFields {
        rho,
        theta,
        velocity,
        pseudo,
        incompressible,
        compressible,
        cell_volume: field.grid().cell_volume(),
    })
}

pub fn kinetic_energies(field: &DenseField, background: f64) -> Result<(f64, f64)> {
    Ok(madelung_helmholtz(field, background)?.kinetic_energies())
}

/// Shell-summed kinetic energy spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBins {
    /// Shell `j` holds modes with `round(|k|L/2π) = j`; its centre is `2πj/L`.
    pub centers: Vec<f64>,
    pub incompressible: Vec<f64>,
    pub compressible: Vec<f64>,
    /// Energy of modes beyond the last shell.
    pub overflow: (f64, f64),
    pub total_incompressible: f64,
    pub total_compressible: f64,
}

impl SpectrumBins {
    /// Spectra divided by their totals (zero when a total vanishes).
    pub fn normalized(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = |v: &[f64], t: f64| v.iter().map(|x| if t > 0.0 { x / t } else { 0.0 }).collect();
        (scale(&self.incompressible, self.total_incompressible), scale(&self.compressible, self.total_compressible))
    }
}

/// Spectra over `n_bins` shells; `None` covers every mode.
pub fn energy_spectra(field: &DenseField, background: f64, n_bins: Option<usize>) -> Result<SpectrumBins> {
    let fields = madelung_helmholtz(field, background)?;
    let shape = field.shape();
    let length = field.grid().length();
    let nyquist_shells = shape[0] / 2 + 1;
    let all_shells = {
        let r: f64 = shape.iter().map(|&n| (n as f64 / 2.0).powi(2)).sum::<f64>().sqrt();
        r.round() as usize + 1
    };
    let bins = match n_bins {
        Some(n) if n == 0 || n > nyquist_shells => {
            return Err(QgpeError::Argument(format!("spectrum needs 1..={nyquist_shells} shells, got {n}")))
        }
        Some(n) => n,
        None => all_shells,
    };
    let fft = FftNd::new(&shape);
    let ks = wavevectors(&shape, length);
    let points = field.values().len() as f64;
    // Parseval: Σ_r |w|² h^d = (h^d/M) Σ_k |ŵ_k|².
    let weight = 0.5 * field.grid().cell_volume() / points;
    let shell_sums = |w: &[Vec<f64>]| {
        let mut shells = vec![0.0; bins];
        let mut overflow = 0.0;
        for comp in w {
            let mut v: Vec<C64> = comp.iter().map(|&x| C64::new(x, 0.0)).collect();
            fft.forward(&mut v);
            for (z, k) in v.iter().zip(&ks) {
                let norm = k.iter().map(|c| c * c).sum::<f64>().sqrt();
                let shell = (norm * length / (2.0 * std::f64::consts::PI)).round() as usize;
                let e = weight * z.norm_sqr();
                if shell < bins {
                    shells[shell] += e;
                } else {
                    overflow += e;
                }
            }
        }
        (shells, overflow)
    };
    let (incompressible, oi) = shell_sums(&fields.incompressible);
    let (compressible, oc) = shell_sums(&fields.compressible);
    let (ti, tc) = fields.kinetic_energies();
    Ok(SpectrumBins {
        centers: (0..bins).map(|j| 2.0 * std::f64::consts::PI * j as f64 / length).collect(),
        incompressible,
        compressible,
        overflow: (oi, oc),
        total_incompressible: ti,
        total_compressible: tc,
    })
}

/// Angular-averaged two-point correlation `g(l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// Shell `j` collects separations with `round(|l|/h) = j`.
    pub separations: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest imaginary part left after the angular average.
    pub imaginary_residue: f64,
}

pub fn correlation_g(field: &DenseField) -> Result<Correlation> {
    let shape = field.shape();
    let norm = field.norm_sqr();
    if norm == 0.0 {
        return Err(QgpeError::Domain("correlation of a zero field".into()));
    }
    let fft = FftNd::new(&shape);
    let mut power = field.values().to_vec();
    fft.forward(&mut power);
    power.iter_mut().for_each(|z| *z = C64::new(z.norm_sqr(), 0.0));
    // inverse(|ψ̂|²)(l) = Σ_r ψ*(r) ψ(r + l).
    fft.inverse(&mut power);
    let h = field.grid().spacing(0);
    let shells = shape[0] / 2 + 1;
    let mut sums = vec![C64::new(0.0, 0.0); shells];
    let mut counts = vec![0usize; shells];
    for (r, z) in power.iter().enumerate() {
        let idx = row_major_index(&shape, r);
        let dist2: f64 = idx
            .iter()
            .zip(&shape)
            .map(|(&i, &n)| {
                let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                m * m
            })
            .sum();
        let shell = dist2.sqrt().round() as usize;
        if shell < shells {
            sums[shell] += z.conj();
            counts[shell] += 1;
        }
    }
    let mut residue: f64 = 0.0;
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let g = s / (c.max(1) as f64 * norm);
            residue = residue.max(g.im.abs());
            g.re
        })
        .collect();
    Ok(Correlation {
        separations: (0..shells).map(|j| j as f64 * h).collect(),
        values,
        imaginary_residue: residue,
    })
}

/// `1 − (g1·g2)/√((g1·g1)(g2·g2))` with rectangle-rule dot products.
pub fn correlation_infidelity(g1: &Correlation, g2: &Correlation) -> Result<f64> {
    if g1.separations.len() != g2.separations.len()
        || g1.separations.iter().zip(&g2.separations).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(QgpeError::GridMismatch("correlations are sampled at different separations".into()));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let denom = (dot(&g1.values, &g1.values) * dot(&g2.values, &g2.values)).sqrt();
    if denom == 0.0 {
        return Err(QgpeError::Domain("correlation infidelity of a zero function".into()));
    }
    Ok(1.0 - dot(&g1.values, &g2.values) / denom)
}

/// Contract the physical index of selected sites with fixed vectors, folding
/// the resulting matrices into the neighbouring kept tensors.
fn reduce_sites(tensors: &[Array3<C64>], vectors: &[Option<[C64; 2]>]) -> Vec<Array3<C64>> {
    let mut kept: Vec<Array3<C64>> = Vec::new();
    let mut pending: Option<Array2<C64>> = None;
    for (t, v) in tensors.iter().zip(vectors) {
        match v {
            Some(v) => {
                let (l, _, r) = t.dim();
                let m = Array2::from_shape_fn((l, r), |(a, b)| v[0] * t[[a, 0, b]] + v[1] * t[[a, 1, b]]);
                pending = Some(match pending {
                    Some(p) => p.dot(&m),
                    None => m,
                });
            }
            None => {
                let t = match pending.take() {
                    Some(p) => {
                        let (l, s, r) = t.dim();
                        let mat = t.to_shape((l, s * r)).expect("contiguous").to_owned();
                        p.dot(&mat).into_shape_with_order((p.nrows(), s, r)).expect("size")
                    }
                    None => t.clone(),
                };
                kept.push(t);
            }
        }
    }
    if let Some(p) = pending {
        let last = kept.pop().expect("at least one site is kept");
        let (l, s, r) = last.dim();
        let mat = last.into_shape_with_order((l * s, r)).expect("size");
        kept.push(mat.dot(&p).into_shape_with_order((l, s, p.ncols())).expect("size"));
    }
    kept
}

/// Sum over every qubit of `axis`, leaving an MPS on the remaining axes.
pub fn project_out_axis(state: &MpsState, axis: usize) -> Result<MpsState> {
    let grid = state.grid();
    if axis >= grid.dims() || grid.dims() < 2 {
        return Err(QgpeError::Argument(format!("cannot project out axis {axis} of a {}D state", grid.dims())));
    }
    let one = C64::new(1.0, 0.0);
    let vectors: Vec<Option<[C64; 2]>> =
        grid.slots().iter().map(|s| if s.axis == axis { Some([one, one]) } else { None }).collect();
    let tensors = reduce_sites(state.tensors(), &vectors);
    let slots: Vec<Slot> = grid
        .slots()
        .iter()
        .filter(|s| s.axis != axis)
        .map(|s| Slot { axis: if s.axis > axis { s.axis - 1 } else { s.axis }, level: s.level })
        .collect();
    let bits: Vec<usize> = (0..grid.dims()).filter(|&a| a != axis).map(|a| grid.bits()[a]).collect();
    let reduced = QuanticsGrid::with_axis_bits(bits, grid.length(), ScaleOrdering::custom(slots))?;
    MpsState::from_tensors(reduced, tensors)
}

/// Dense projection of a 3D state onto the plane orthogonal to `axis`.
pub fn plane_projection(state: &MpsState, axis: usize) -> Result<DenseField> {
    if state.grid().dims() != 3 {
        return Err(QgpeError::Argument("plane projection needs a 3D state".into()));
    }
    DenseField::from_mps(&project_out_axis(state, axis)?)
}

/// A dyadic sub-box: along axis `a`, the `levels[a]` coarsest qubits are fixed
/// so that the box starts at index `blocks[a] · 2^(N_a − levels[a])`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubBox {
    pub levels: Vec<usize>,
    pub blocks: Vec<usize>,
}

/// Row-major samples of a sub-box.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSlice {
    pub shape: Vec<usize>,
    /// Grid index of the first sample along each axis.
    pub offset: Vec<usize>,
    pub values: Vec<C64>,
}

/// Densify only the sub-box by fixing its coarse qubits first.
pub fn region_slice(state: &MpsState, region: &SubBox) -> Result<RegionSlice> {
    let grid = state.grid();
    let d = grid.dims();
    if region.levels.len() != d || region.blocks.len() != d {
        return Err(QgpeError::Argument(format!("sub-box needs {d} levels and blocks")));
    }
    for a in 0..d {
        if region.levels[a] > grid.bits()[a] || region.blocks[a] >= 1usize << region.levels[a] {
            return Err(QgpeError::Argument(format!("sub-box is outside the grid along axis {a}")));
        }
    }
    let remaining: Vec<usize> = (0..d).map(|a| grid.bits()[a] - region.levels[a]).collect();
    let points: u128 = 1u128 << remaining.iter().sum::<usize>();
    if points > DENSE_POINT_CAP {
        return Err(QgpeError::SizeCap { requested: points, cap: DENSE_POINT_CAP });
    }
    let (zero, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let vectors: Vec<Option<[C64; 2]>> = grid
        .slots()
        .iter()
        .map(|s| {
            if s.level <= region.levels[s.axis] {
                let bit = (region.blocks[s.axis] >> (region.levels[s.axis] - s.level)) & 1;
                Some(if bit == 1 { [zero, one] } else { [one, zero] })
            } else {
                None
            }
        })
        .collect();
    let shape: Vec<usize> = remaining.iter().map(|&b| 1usize << b).collect();
    let offset: Vec<usize> = (0..d).map(|a| region.blocks[a] << remaining[a]).collect();
    if vectors.iter().all(Option::is_some) {
        return Ok(RegionSlice { shape, offset, values: vec![single_amplitude(state, &vectors)] });
    }
    let tensors = reduce_sites(state.tensors(), &vectors);
    let slots: Vec<Slot> = grid
        .slots()
        .iter()
        .filter(|s| s.level > region.levels[s.axis])
        .map(|s| Slot { axis: s.axis, level: s.level - region.levels[s.axis] })
        .collect();
    // Axes with no free qubit keep a single sample; the sub-grid drops them.
    let live: Vec<usize> = (0..d).filter(|&a| remaining[a] > 0).collect();
    let slots: Vec<Slot> = slots
        .into_iter()
        .map(|s| Slot { axis: live.iter().position(|&a| a == s.axis).expect("live axis"), level: s.level })
        .collect();
    let bits: Vec<usize> = live.iter().map(|&a| remaining[a]).collect();
    let sub = QuanticsGrid::with_axis_bits(bits, grid.length(), ScaleOrdering::custom(slots))?;
    let values = MpsState::from_tensors(sub, tensors)?.to_dense(DENSE_POINT_CAP)?;
    Ok(RegionSlice { shape, offset, values })
}

fn single_amplitude(state: &MpsState, vectors: &[Option<[C64; 2]>]) -> C64 {
    let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for (t, v) in state.tensors().iter().zip(vectors) {
        let v = v.expect("every site fixed");
        let (l, _, r) = t.dim();
        let m = Array2::from_shape_fn((l, r), |(a, b)| v[0] * t[[a, 0, b]] + v[1] * t[[a, 1, b]]);
        acc = acc.dot(&m);
    }
    acc[[0, 0]]
}
