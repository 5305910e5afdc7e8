//! Benchmark initial states: dark solitons, vortex dipoles and rings, the
//! four-line reconnection setup and random-phase turbulence.

use std::f64::consts::PI;

use ndarray::Array3;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dns::{DenseField, DnsImaginaryOptions, DnsSolver, DENSE_POINT_CAP};
use crate::elliptic::{complete_k, complete_pi, incomplete_pi, jacobi_am, jacobi_cn};
use crate::error::{QgpeError, Result};
use crate::grid::{QuanticsGrid, ScaleOrdering};
use crate::mpo::{prolongate, MpoOperator};
use crate::mps::MpsState;
use crate::tdvp::{imaginary_time_evolve, remove_uniform_component, EvolutionConfig, ImaginaryTimeOptions, TimeMode};
use crate::truncation::TruncationPolicy;

fn require_dims(grid: &QuanticsGrid, dims: usize, what: &str) -> Result<()> {
    if grid.dims() != dims {
        return Err(QgpeError::Argument(format!("{what} needs a {dims}D grid, got {}D", grid.dims())));
    }
    Ok(())
}

/// Which of the two travelling solutions to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonParams {
    /// Background (maximum) density.
    pub rho1: f64,
    /// Elliptic modulus in `(0, 1)`.
    pub k_mod: f64,
    pub branch: Branch,
    /// Total phase winding across the box, in units of `2π`.
    pub winding: i32,
}

impl Default for SolitonParams {
    fn default() -> Self {
        SolitonParams { rho1: 1.0, k_mod: 1.0 - 5e-13, branch: Branch::Plus, winding: -1 }
    }
}

/// A periodic travelling dark soliton (cnoidal wave) on a box of side `length`.
///
/// The density is `ρ1 + (ρ0 − ρ1) cn²(u)` with `u = K(2x/L − 1)`, so the
/// minimum `ρ0` sits at `L/2`. `ρ0` is always derived from `ρ1`, `k` and `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct DarkSoliton {
    params: SolitonParams,
    length: f64,
    quarter: f64,
    rho0: f64,
    velocity: f64,
    current: f64,
    characteristic: f64,
}

impl DarkSoliton {
    pub fn new(length: f64, params: SolitonParams) -> Result<Self> {
        let k = params.k_mod;
        if !(k > 0.0 && k < 1.0) {
            return Err(QgpeError::Domain(format!("soliton modulus must lie in (0, 1), got {k}")));
        }
        if !(length > 0.0 && params.rho1 > 0.0) {
            return Err(QgpeError::Domain("soliton needs positive length and background density".into()));
        }
        let quarter = complete_k(k)?;
        let dip = (2.0 * k * quarter / length).powi(2);
        let rho0 = params.rho1 - dip;
        if rho0 < 0.0 {
            return Err(QgpeError::Domain(format!(
                "box too short for modulus {k}: minimum density would be {rho0}"
            )));
        }
        if rho0 == 0.0 {
            return Err(QgpeError::Domain("black soliton (zero minimum density) has no finite phase".into()));
        }
        let rho1 = params.rho1;
        let rho2 = rho0 + (2.0 * quarter / length).powi(2);
        let characteristic = 1.0 - rho1 / rho0;
        let pi = complete_pi(characteristic, k)?;
        let sign = params.branch.sign();
        // Phase gradient v + J/ρ with J² = ρ0ρ1ρ2; periodicity fixes v.
        let velocity = 2.0 * PI * params.winding as f64 / length + sign * (rho1 * rho2 / rho0).sqrt() * pi / quarter;
        let current = -sign * (rho0 * rho1 * rho2).sqrt();
        if !velocity.is_finite() {
            return Err(QgpeError::Domain("soliton velocity is not finite".into()));
        }
        Ok(DarkSoliton { params, length, quarter, rho0, velocity, current, characteristic })
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.params.rho1
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// Time to cross the box once, `L/|v|`.
    pub fn period(&self) -> f64 {
        self.length / self.velocity.abs()
    }

    fn argument(&self, x: f64) -> f64 {
        self.quarter * (2.0 * x / self.length - 1.0)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        let cn = jacobi_cn(self.argument(x), self.params.k_mod)?;
        Ok(self.params.rho1 + (self.rho0 - self.params.rho1) * cn * cn)
    }

    /// Phase on `[0, L]`, up to a constant; it winds by `2π·winding` over the box.
    pub fn phase(&self, x: f64) -> Result<f64> {
        let k = self.params.k_mod;
        let am = jacobi_am(self.argument(x), k)?;
        let integral = self.length / (2.0 * self.quarter * self.rho0) * incomplete_pi(self.characteristic, am, k)?;
        Ok(self.velocity * x + self.current * integral)
    }

    /// `ψ(x, t) = √ρ(x − vt) e^{iφ(x − vt)}`, exact up to a global phase.
    pub fn value(&self, x: f64, t: f64) -> Result<C64> {
        let s = (x - self.velocity * t).rem_euclid(self.length);
        Ok(C64::from_polar(self.density(s)?.sqrt(), self.phase(s)?))
    }

    pub fn dense(&self, grid: &QuanticsGrid, t: f64) -> Result<DenseField> {
        require_dims(grid, 1, "the dark soliton")?;
        let values = (0..grid.axis_points(0))
            .map(|i| self.value(grid.coordinates(&[i])[0], t))
            .collect::<Result<Vec<_>>>()?;
        DenseField::new(grid.clone(), values)
    }

    pub fn mps(&self, grid: &QuanticsGrid, t: f64, policy: &TruncationPolicy) -> Result<MpsState> {
        self.dense(grid, t)?.to_mps(policy)
    }
}

/// Dark soliton sampled on a 1D grid whose side sets the box length.
pub fn dark_soliton(grid: &QuanticsGrid, params: SolitonParams) -> Result<DenseField> {
    DarkSoliton::new(grid.length(), params)?.dense(grid, 0.0)
}

/// Rational fit of an isolated vortex core, `|ψ|² = r²(a1 + a2 r²)/(1 + b1 r² + b2 r⁴)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PadeCore {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Default for PadeCore {
    fn default() -> Self {
        let a1 = 11.0 / 32.0;
        let b1 = (5.0 - 32.0 * a1) / (48.0 - 192.0 * a1);
        let a2 = a1 * (b1 - 0.25);
        PadeCore { a1, a2, b1, b2: a2 }
    }
}

impl PadeCore {
    pub fn amplitude(&self, r: f64) -> f64 {
        let r2 = r * r;
        (r2 * (self.a1 + self.a2 * r2) / (1.0 + self.b1 * r2 + self.b2 * r2 * r2)).sqrt()
    }
}

/// A vortex of charge +1 at `r1` and one of charge −1 at `r2`, in units of ξ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleParams {
    pub r1: [f64; 2],
    pub r2: [f64; 2],
}

impl DipoleParams {
    /// Cores at `((L ∓ d)/2, L/2)`; the pair travels towards `+y`.
    pub fn centered(length: f64, separation: f64) -> Self {
        DipoleParams {
            r1: [(length - separation) / 2.0, length / 2.0],
            r2: [(length + separation) / 2.0, length / 2.0],
        }
    }

    pub fn separation(&self) -> f64 {
        ((self.r2[0] - self.r1[0]).powi(2) + (self.r2[1] - self.r1[1]).powi(2)).sqrt()
    }

    fn validate(&self, length: f64) -> Result<()> {
        for r in [self.r1, self.r2] {
            if r.iter().any(|&c| !(0.0..length).contains(&c) || c == 0.0) {
                return Err(QgpeError::Domain(format!("vortex core {r:?} lies outside (0, {length})")));
            }
        }
        if self.separation() == 0.0 {
            return Err(QgpeError::Domain("vortex cores coincide".into()));
        }
        Ok(())
    }
}

/// Dipole ansatz at `(x, y)` with a phase ramp along `y` that makes the
/// product of the two cores periodic across `y = 0` and `y = L`.
fn dipole_value(core: &PadeCore, p: &DipoleParams, length: f64, x: f64, y: f64) -> C64 {
    let angle = |r: [f64; 2], x: f64, y: f64| (y - r[1]).atan2(x - r[0]);
    let difference = |x: f64, y: f64| angle(p.r1, x, y) - angle(p.r2, x, y);
    let mismatch = difference(x, length) - difference(x, 0.0);
    let d1 = ((x - p.r1[0]).powi(2) + (y - p.r1[1]).powi(2)).sqrt();
    let d2 = ((x - p.r2[0]).powi(2) + (y - p.r2[1]).powi(2)).sqrt();
    let modulus = core.amplitude(d1) * core.amplitude(d2);
    C64::from_polar(modulus, difference(x, y) - mismatch * y / length)
}

/// Sampler of the dipole ansatz on a box of side `length`.
pub fn dipole_sampler(length: f64, params: &DipoleParams) -> Result<impl Fn(&[f64]) -> C64> {
    params.validate(length)?;
    let core = PadeCore::default();
    let params = params.clone();
    Ok(move |x: &[f64]| dipole_value(&core, &params, length, x[0], x[1]))
}

pub fn vortex_dipole(grid: &QuanticsGrid, params: &DipoleParams) -> Result<DenseField> {
    require_dims(grid, 2, "the vortex dipole")?;
    DenseField::from_fn(grid.clone(), dipole_sampler(grid.length(), params)?)
}

/// Sampler of a vortex ring of radius `radius` centred in the box, axis
/// along `z`, travelling towards `+z`.
pub fn ring_sampler(length: f64, radius: f64) -> Result<impl Fn(&[f64]) -> C64> {
    if !(radius > 0.0 && radius < length / 2.0) {
        return Err(QgpeError::Domain(format!("ring radius must lie in (0, {}), got {radius}", length / 2.0)));
    }
    let core = PadeCore::default();
    let params = DipoleParams { r1: [-radius, length / 2.0], r2: [radius, length / 2.0] };
    Ok(move |x: &[f64]| {
        let s = ((x[0] - length / 2.0).powi(2) + (x[1] - length / 2.0).powi(2)).sqrt();
        dipole_value(&core, &params, length, s, x[2])
    })
}

pub fn vortex_ring(grid: &QuanticsGrid, radius: f64) -> Result<DenseField> {
    require_dims(grid, 3, "the vortex ring")?;
    DenseField::from_fn(grid.clone(), ring_sampler(grid.length(), radius)?)
}

/// Combine `a(x, y)` and `b(y, z)` into the 3D state `a(x, y)·b(y, z)`.
///
/// `a` must use the stair ordering joined through the coarse scales
/// (`x` fine to coarse, then `y` coarse to fine) and `b` the stair ordering
/// joined through the fine scales (`y` coarse to fine, then `z` fine to
/// coarse). Each is broadcast along its missing axis with trivial delta
/// tensors, so the two chains overlap on the `y` qubits, and the Hadamard
/// product gives a state on the 3D stair `xyz` grid.
pub fn extend_2d_to_3d(a: &MpsState, b: &MpsState, policy: &TruncationPolicy) -> Result<MpsState> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.dims() != 2 || gb.dims() != 2 {
        return Err(QgpeError::GridMismatch("both inputs must be planar states".into()));
    }
    if !ga.is_uniform() || ga.bits() != gb.bits() || ga.length() != gb.length() {
        return Err(QgpeError::GridMismatch("planar grids differ in resolution or size".into()));
    }
    let n = ga.n();
    let target = QuanticsGrid::new(3, n, ga.length(), ScaleOrdering::stair())?;
    let slots = target.slots();
    let shifted = |s: &crate::grid::Slot, by: usize| crate::grid::Slot { axis: s.axis + by, level: s.level };
    let prefix_ok = ga.slots().iter().zip(&slots[..2 * n]).all(|(s, t)| *s == *t);
    let suffix_ok = gb.slots().iter().zip(&slots[n..]).all(|(s, t)| shifted(s, 1) == *t);
    if !prefix_ok || !suffix_ok {
        return Err(QgpeError::GridMismatch(
            "planar orderings do not tile the 3D stair chain (xy needs stair, yz needs small-scale stair)".into(),
        ));
    }
    let delta = || Array3::from_elem((1, 2, 1), C64::new(1.0, 0.0));
    let mut left = a.tensors().to_vec();
    left.extend((0..n).map(|_| delta()));
    let mut right: Vec<Array3<C64>> = (0..n).map(|_| delta()).collect();
    right.extend(b.tensors().iter().cloned());
    let left = MpsState::from_tensors(target.clone(), left)?;
    let right = MpsState::from_tensors(target, right)?;
    MpoOperator::hadamard_promote(&left).apply_exact(&right)?.compress(policy)
}

/// Two perpendicular vortex dipoles: lines along `z` split by `d_vertical`
/// in `x`, and lines along `x` split by `d_horizontal` in `z`, their centres
/// `separation` apart in `y`. The pairs travel towards each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconnectionParams {
    pub d_vertical: f64,
    pub d_horizontal: f64,
    pub separation: f64,
}

impl Default for ReconnectionParams {
    fn default() -> Self {
        ReconnectionParams { d_vertical: 8.0, d_horizontal: 4.0, separation: 6.0 }
    }
}

/// Planar factors of the reconnection state: `(a(x, y), b(y, z))`.
pub fn reconnection_planes(n: usize, length: f64, params: &ReconnectionParams, policy: &TruncationPolicy) -> Result<(MpsState, MpsState)> {
    let mid = length / 2.0;
    let grid_a = QuanticsGrid::new(2, n, length, ScaleOrdering::stair())?;
    let grid_b = QuanticsGrid::new(2, n, length, ScaleOrdering::stair_small_scale())?;
    let vertical = DipoleParams {
        r1: [mid - params.d_vertical / 2.0, mid - params.separation / 2.0],
        r2: [mid + params.d_vertical / 2.0, mid - params.separation / 2.0],
    };
    // Evaluated in the (z, y) frame and conjugated so it moves towards −y.
    let horizontal = DipoleParams {
        r1: [mid - params.d_horizontal / 2.0, mid + params.separation / 2.0],
        r2: [mid + params.d_horizontal / 2.0, mid + params.separation / 2.0],
    };
    let fa = dipole_sampler(length, &vertical)?;
    let fb = dipole_sampler(length, &horizontal)?;
    let a = MpsState::encode_function(&grid_a, |x: &[f64]| fa(x), policy)?;
    let b = MpsState::encode_function(&grid_b, |x: &[f64]| fb(&[x[1], x[0]]).conj(), policy)?;
    Ok((a, b))
}

/// Four-line reconnection state on a 3D stair grid with `n` qubits per axis.
pub fn reconnection_state(n: usize, length: f64, params: &ReconnectionParams, policy: &TruncationPolicy) -> Result<MpsState> {
    let (a, b) = reconnection_planes(n, length, params, policy)?;
    extend_2d_to_3d(&a, &b, policy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    Linear,
    /// Periodic cubic spline; 1D dense backend only.
    CubicPeriodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RpiBackend {
    Dense,
    Mps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpiParams {
    /// Qubits per axis of the random coarse field.
    pub coarse_bits: usize,
    /// Bond dimension of the random coarse MPS.
    pub chi_rpi: usize,
    pub seed: u64,
    pub interpolation: Interpolation,
    /// Duration of the imaginary-time relaxation, in ξ/c.
    pub imaginary_time: f64,
    /// Pin the phase during relaxation (1D soliton gases).
    pub fix_phase: bool,
}

impl Default for RpiParams {
    fn default() -> Self {
        RpiParams {
            coarse_bits: 4,
            chi_rpi: 8,
            seed: 0,
            interpolation: Interpolation::Linear,
            imaginary_time: 1.0,
            fix_phase: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum RpiState {
    Dense(DenseField),
    Mps(MpsState),
}

impl RpiState {
    pub fn into_mps(self, policy: &TruncationPolicy) -> Result<MpsState> {
        match self {
            RpiState::Dense(f) => f.to_mps(policy),
            RpiState::Mps(s) => Ok(s),
        }
    }
}

/// Uniform samples in `[−1, 1] + i[−1, 1]` on the coarse grid, row-major.
pub fn coarse_samples(dims: usize, coarse_bits: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 1usize << (dims * coarse_bits);
    (0..count)
        .map(|_| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

/// Periodic linear interpolation along `axis` by an integer `factor`.
fn upsample_linear(values: &[C64], shape: &[usize], axis: usize, factor: usize) -> (Vec<C64>, Vec<usize>) {
    let mut out_shape = shape.to_vec();
    out_shape[axis] *= factor;
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); values.len() * factor];
    for o in 0..outer {
        for j in 0..n * factor {
            let (i0, frac) = (j / factor, (j % factor) as f64 / factor as f64);
            let i1 = (i0 + 1) % n;
            for s in 0..stride {
                let a = values[(o * n + i0) * stride + s];
                let b = values[(o * n + i1) * stride + s];
                out[(o * n * factor + j) * stride + s] = a * (1.0 - frac) + b * frac;
            }
        }
    }
    (out, out_shape)
}

/// Periodic cubic spline through equally spaced samples, evaluated `factor`
/// times more densely.
fn upsample_cubic_periodic(values: &[C64], factor: usize) -> Vec<C64> {
    let n = values.len();
    // Second derivatives solve the circulant system M[i−1] + 4M[i] + M[i+1] = 6Δ²y[i].
    let mut curvature: Vec<C64> = (0..n)
        .map(|i| 6.0 * (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut curvature);
    for (j, c) in curvature.iter_mut().enumerate() {
        *c /= 4.0 + 2.0 * (2.0 * PI * j as f64 / n as f64).cos();
    }
    planner.plan_fft_inverse(n).process(&mut curvature);
    curvature.iter_mut().for_each(|c| *c /= n as f64);
    (0..n * factor)
        .map(|j| {
            let (i, t) = (j / factor, (j % factor) as f64 / factor as f64);
            let (y0, y1) = (values[i], values[(i + 1) % n]);
            let (m0, m1) = (curvature[i], curvature[(i + 1) % n]);
            y0 * (1.0 - t) + y1 * t + (m0 * ((1.0 - t).powi(3) - (1.0 - t)) + m1 * (t.powi(3) - t)) / 6.0
        })
        .collect()
}

/// Interpolate row-major coarse samples onto `grid`.
pub fn interpolate_to_grid(coarse: &[C64], coarse_bits: usize, grid: &QuanticsGrid, interpolation: Interpolation) -> Result<DenseField> {
    let d = grid.dims();
    if !grid.is_uniform() || coarse_bits >= grid.n() {
        return Err(QgpeError::Argument(format!(
            "coarse grid needs fewer qubits per axis than the target ({coarse_bits} vs {})",
            grid.n()
        )));
    }
    if coarse.len() != 1usize << (d * coarse_bits) {
        return Err(QgpeError::Argument("coarse sample count does not match the grid".into()));
    }
    if grid.total_points() > DENSE_POINT_CAP {
        return Err(QgpeError::SizeCap { requested: grid.total_points(), cap: DENSE_POINT_CAP });
    }
    let factor = 1usize << (grid.n() - coarse_bits);
    let values = match interpolation {
        Interpolation::CubicPeriodic if d == 1 => upsample_cubic_periodic(coarse, factor),
        Interpolation::CubicPeriodic => {
            return Err(QgpeError::Argument("cubic interpolation is only available in 1D".into()))
        }
        Interpolation::Linear => {
            let mut shape = vec![1usize << coarse_bits; d];
            let mut values = coarse.to_vec();
            for axis in 0..d {
                let (v, s) = upsample_linear(&values, &shape, axis, factor);
                values = v;
                shape = s;
            }
            values
        }
    };
    DenseField::new(grid.clone(), values)
}

/// Random-phase-interpolation turbulence state.
///
/// `evolution` supplies μ, g, the timestep and truncation for the
/// relaxation; its mode and duration are overridden.
pub fn random_phase_state(grid: &QuanticsGrid, params: &RpiParams, backend: RpiBackend, evolution: &EvolutionConfig) -> Result<RpiState> {
    if params.coarse_bits == 0 || params.coarse_bits >= grid.n() || !grid.is_uniform() {
        return Err(QgpeError::Argument(format!(
            "coarse qubits per axis must lie in [1, {}), got {}",
            grid.n(),
            params.coarse_bits
        )));
    }
    let relax = EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: params.imaginary_time, ..evolution.clone() };
    match backend {
        RpiBackend::Dense => {
            let coarse = coarse_samples(grid.dims(), params.coarse_bits, params.seed);
            let mut field = interpolate_to_grid(&coarse, params.coarse_bits, grid, params.interpolation)?;
            // The uniform ground-state component is projected out once; the
            // −μ term then relaxes the bulk towards μ/g on its own.
            let mean = field.values().iter().sum::<C64>() / field.values().len() as f64;
            field.values_mut().iter_mut().for_each(|z| *z -= mean);
            let options = DnsImaginaryOptions { fix_phase: params.fix_phase, remove_ground_state: false, renormalize: false };
            if params.imaginary_time > 0.0 {
                DnsSolver::new(grid, relax)?.imaginary_time(&mut field, options)?;
            }
            Ok(RpiState::Dense(field))
        }
        RpiBackend::Mps => {
            if params.fix_phase || params.interpolation != Interpolation::Linear {
                return Err(QgpeError::Argument("the MPS backend supports linear interpolation without phase pinning".into()));
            }
            let coarse_grid = QuanticsGrid::new(grid.dims(), params.coarse_bits, grid.length(), grid.ordering().clone())?;
            let mut state = MpsState::random(coarse_grid, params.chi_rpi.max(1), params.seed);
            for _ in params.coarse_bits..grid.n() {
                for axis in 0..grid.dims() {
                    state = prolongate(&state, axis, &evolution.policy)?;
                }
            }
            if state.grid().slots() != grid.slots() {
                return Err(QgpeError::GridMismatch("refined grid does not match the requested ordering".into()));
            }
            let state = remove_uniform_component(&state.with_grid(grid.clone())?, &evolution.policy)?;
            let options = ImaginaryTimeOptions { remove_ground_state: false, renormalize: false };
            let state = if params.imaginary_time > 0.0 {
                imaginary_time_evolve(&state, &relax, options)?
            } else {
                state
            };
            Ok(RpiState::Mps(state))
        }
    }
}
