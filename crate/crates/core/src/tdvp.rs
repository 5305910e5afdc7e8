//! Time integration of the damped Gross-Pitaevskii equation with two-site TDVP.
//!
//! In natural units the generator is `(1 − iγ)(K + U)` with `K = −∇²/2` and
//! `U = g|ψ|² − μ`. Each step splits the exponential into kinetic and
//! interaction factors and evolves each with one symmetric TDVP sweep.

use std::time::Instant;

use ndarray::{Array1, Array3, ArrayD, IxDyn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::apply::apply_mpo;
use crate::chain::{from_left_matrix, from_right_matrix};
use crate::env::{apply_one_site, apply_two_site, edge, grow_left, grow_right, merge, right_environments};
use crate::error::{QgpeError, Result};
use crate::grid::QuanticsGrid;
use crate::krylov::{expm_multiply, KrylovOptions};
use crate::linalg::svd_truncated;
use crate::mpo::MpoOperator;
use crate::mps::MpsState;
use crate::truncation::TruncationPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitting {
    /// Half kinetic, full interaction, half kinetic.
    Strang2,
    /// Full interaction, then full kinetic.
    Lie1,
    /// One sweep with the summed generator.
    NoSplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeMode {
    RealTime,
    ImaginaryTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub gamma: f64,
    pub mu: f64,
    pub g_int: f64,
    pub dt: f64,
    pub splitting: Splitting,
    pub policy: TruncationPolicy,
    pub mode: TimeMode,
    pub t_final: f64,
    pub krylov_dim: usize,
    pub krylov_tol: f64,
    /// Sweeps of the variational density fit `|ψ|²` per interaction sub-step.
    pub density_sweeps: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            gamma: 0.0,
            mu: 1.0,
            g_int: 1.0,
            dt: 1.0 / 32.0,
            splitting: Splitting::Strang2,
            policy: TruncationPolicy::default(),
            mode: TimeMode::RealTime,
            t_final: 0.0,
            krylov_dim: 30,
            krylov_tol: 1e-12,
            density_sweeps: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(QgpeError::Argument(msg));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("damping must be finite and non-negative, got {}", self.gamma));
        }
        if !(self.g_int > 0.0 && self.g_int.is_finite()) {
            return bad(format!("interaction must be positive, got {}", self.g_int));
        }
        if !self.mu.is_finite() {
            return bad("chemical potential must be finite".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("timestep must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("final time must be non-negative, got {}", self.t_final));
        }
        if self.krylov_dim == 0 || !(self.krylov_tol > 0.0) {
            return bad("Krylov dimension and tolerance must be positive".into());
        }
        TruncationPolicy::new(self.policy.chi_max, Some(self.policy.eps))?;
        Ok(())
    }

    /// Complex step `Δτ`: `(1 − iγ)Δt` in real time, `−iΔt` in imaginary
    /// time so that `exp(−iΔτ H) = exp(−Δt H)`.
    pub fn dtau(&self) -> C64 {
        match self.mode {
            TimeMode::RealTime => C64::new(1.0, -self.gamma) * self.dt,
            TimeMode::ImaginaryTime => C64::new(0.0, -self.dt),
        }
    }

    /// Background density `μ/g`.
    pub fn background_density(&self) -> f64 {
        self.mu / self.g_int
    }

    /// Number of whole steps covering `t_final`.
    pub fn n_steps(&self) -> usize {
        let exact = self.t_final / self.dt;
        let n = exact.round();
        if (exact - n).abs() > 1e-9 * exact.max(1.0) {
            log::warn!("final time {} is not a multiple of dt {}; running {} steps", self.t_final, self.dt, n);
        }
        n as usize
    }

    fn krylov(&self) -> KrylovOptions {
        KrylovOptions { dim: self.krylov_dim, tol: self.krylov_tol }
    }
}

/// Per-step record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub time: f64,
    pub norm: f64,
    pub max_bond: usize,
    pub discarded_weight: f64,
    pub wall_ms: f64,
}

/// Diagnostics of one TDVP sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepInfo {
    /// Summed discarded weight of all two-site splits.
    pub discarded: f64,
    /// Largest Krylov error estimate.
    pub krylov_error: f64,
}

fn local_exp<F>(apply: F, block: &ArrayD<C64>, tau: C64, opts: &KrylovOptions) -> Result<(ArrayD<C64>, f64)>
where
    F: Fn(&ArrayD<C64>) -> ArrayD<C64>,
{
    let shape = IxDyn(block.shape());
    let flat = Array1::from_iter(block.iter().copied());
    let matvec = |v: &Array1<C64>| -> Array1<C64> {
        let t = ArrayD::from_shape_vec(shape.clone(), v.to_vec()).expect("size");
        Array1::from_iter(apply(&t).iter().copied())
    };
    let (out, info) = expm_multiply(matvec, &flat, tau, opts)?;
    Ok((ArrayD::from_shape_vec(shape.clone(), out.to_vec()).expect("size"), info.error_estimate))
}

fn to_matrix(theta: &ArrayD<C64>) -> (ndarray::Array2<C64>, usize, usize) {
    let (l, r) = (theta.shape()[0], theta.shape()[3]);
    let m = theta
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((l * 2, 2 * r))
        .expect("size");
    (m, l, r)
}

/// One symmetric two-site TDVP sweep (left to right, then back) realizing
/// `exp(−i dtau H)|ψ⟩` on the MPS manifold. The result has centre 0.
pub fn two_site_tdvp_sweep(
    state: &MpsState,
    op: &MpoOperator,
    dtau: C64,
    policy: &TruncationPolicy,
    krylov: &KrylovOptions,
) -> Result<(MpsState, SweepInfo)> {
    if op.grid().slots() != state.grid().slots() || op.grid().bits() != state.grid().bits() {
        return Err(QgpeError::GridMismatch("operator and state use different grids".into()));
    }
    let n = state.n_sites();
    let ops = op.tensors();
    let mut info = SweepInfo::default();
    if n == 1 {
        let env = edge();
        let site = state.tensors()[0].clone().into_dyn();
        let (out, err) = local_exp(|t| apply_one_site(&env, &ops[0], &env, t), &site, dtau, krylov)?;
        info.krylov_error = err;
        let t: Array3<C64> = out.into_dimensionality().expect("rank 3");
        let mut s = MpsState::from_tensors(state.grid().clone(), vec![t])?;
        s.center = Some(0);
        return Ok((s, info));
    }
    let half = dtau * 0.5;
    let mut psi = state.canonicalize(0)?.tensors;
    let mut right = right_environments(&psi, ops, &psi);
    let mut left: Vec<Array3<C64>> = vec![edge(); n + 1];
    let note = |info: &mut SweepInfo, err: f64| info.krylov_error = info.krylov_error.max(err);

    for i in 0..n - 1 {
        let theta = merge(&psi[i], &psi[i + 1]);
        let (lenv, renv) = (&left[i], &right[i + 2]);
        let (theta, err) =
            local_exp(|t| apply_two_site(lenv, &ops[i], &ops[i + 1], renv, t), &theta, half, krylov)?;
        note(&mut info, err);
        let (m, l, r) = to_matrix(&theta);
        let svd = svd_truncated(&m, policy)?;
        info.discarded += svd.discarded;
        let mut sv = svd.vt;
        for (mut row, &s) in sv.rows_mut().into_iter().zip(&svd.s) {
            row.mapv_inplace(|z| z * s);
        }
        psi[i] = from_left_matrix(svd.u, l, 2);
        psi[i + 1] = from_right_matrix(sv, 2, r);
        left[i + 1] = grow_left(&left[i], &psi[i], &ops[i], &psi[i]);
        if i + 2 < n {
            let site = psi[i + 1].clone().into_dyn();
            let (lenv, renv) = (&left[i + 1], &right[i + 2]);
            let (site, err) = local_exp(|t| apply_one_site(lenv, &ops[i + 1], renv, t), &site, -half, krylov)?;
            note(&mut info, err);
            psi[i + 1] = site.into_dimensionality().expect("rank 3");
        }
    }
    for i in (0..n - 1).rev() {
        let theta = merge(&psi[i], &psi[i + 1]);
        let (lenv, renv) = (&left[i], &right[i + 2]);
        let (theta, err) =
            local_exp(|t| apply_two_site(lenv, &ops[i], &ops[i + 1], renv, t), &theta, half, krylov)?;
        note(&mut info, err);
        let (m, l, r) = to_matrix(&theta);
        let svd = svd_truncated(&m, policy)?;
        info.discarded += svd.discarded;
        let mut us = svd.u;
        for (mut col, &s) in us.columns_mut().into_iter().zip(&svd.s) {
            col.mapv_inplace(|z| z * s);
        }
        psi[i] = from_left_matrix(us, l, 2);
        psi[i + 1] = from_right_matrix(svd.vt, 2, r);
        right[i + 1] = grow_right(&right[i + 2], &psi[i + 1], &ops[i + 1], &psi[i + 1]);
        if i > 0 {
            let site = psi[i].clone().into_dyn();
            let (lenv, renv) = (&left[i], &right[i + 1]);
            let (site, err) = local_exp(|t| apply_one_site(lenv, &ops[i], renv, t), &site, -half, krylov)?;
            note(&mut info, err);
            psi[i] = site.into_dimensionality().expect("rank 3");
        }
    }
    let mut out = MpsState::from_tensors(state.grid().clone(), psi)?;
    out.center = Some(0);
    Ok((out, info))
}

/// Stepper holding the kinetic operator and the last density fit.
#[derive(Clone, Debug)]
pub struct Evolver {
    config: EvolutionConfig,
    kinetic: MpoOperator,
    density: Option<MpsState>,
    time: f64,
}

impl Evolver {
    pub fn new(grid: &QuanticsGrid, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        let kinetic = MpoOperator::laplacian_default(grid)?.scaled(C64::from(-0.5));
        Ok(Evolver { config, kinetic, density: None, time: 0.0 })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    /// The kinetic operator `−∇²/2`.
    pub fn kinetic(&self) -> &MpoOperator {
        &self.kinetic
    }

    /// `|ψ|²` as an MPS, fitted variationally from the previous density.
    pub fn density(&mut self, state: &MpsState) -> Result<MpsState> {
        let promoted = MpoOperator::hadamard_promote(&state.conj());
        let (guess, sweeps) = match self.density.take() {
            Some(d) if d.grid().slots() == state.grid().slots() && d.norm() > 0.0 => (d, self.config.density_sweeps),
            // The state itself is a nonzero guess of the right bond size; a
            // cold start needs a few more sweeps.
            _ => (state.clone(), self.config.density_sweeps.max(4)),
        };
        let fit = apply_mpo(&promoted, state, &guess, sweeps, &self.config.policy)?;
        self.density = Some(fit.state.clone());
        Ok(fit.state)
    }

    /// `U = g|ψ|² − μ` frozen at `state`.
    pub fn interaction(&mut self, state: &MpsState) -> Result<MpoOperator> {
        let rho = self.density(state)?;
        let g = self.config.g_int;
        let shift = MpoOperator::identity(state.grid()).scaled(C64::from(-self.config.mu));
        MpoOperator::hadamard_promote(&rho).scaled(C64::from(g)).add(&shift)?.compress(&TruncationPolicy::exact())
    }

    fn sweep(&self, state: &MpsState, op: &MpoOperator, dtau: C64, acc: &mut f64) -> Result<MpsState> {
        let (out, info) = two_site_tdvp_sweep(state, op, dtau, &self.config.policy, &self.config.krylov())?;
        *acc += info.discarded;
        Ok(out)
    }

    /// Advance by one timestep.
    pub fn step(&mut self, state: &MpsState) -> Result<(MpsState, StepReport)> {
        let start = Instant::now();
        if state.norm() == 0.0 {
            return Err(QgpeError::Domain("cannot evolve the zero state".into()));
        }
        let dtau = self.config.dtau();
        let mut discarded = 0.0;
        let kinetic = self.kinetic.clone();
        let next = match self.config.splitting {
            Splitting::Strang2 => {
                let a = self.sweep(state, &kinetic, dtau * 0.5, &mut discarded)?;
                let u = self.interaction(&a)?;
                let b = self.sweep(&a, &u, dtau, &mut discarded)?;
                self.sweep(&b, &kinetic, dtau * 0.5, &mut discarded)?
            }
            Splitting::Lie1 => {
                let u = self.interaction(state)?;
                let a = self.sweep(state, &u, dtau, &mut discarded)?;
                self.sweep(&a, &kinetic, dtau, &mut discarded)?
            }
            Splitting::NoSplit => {
                let u = self.interaction(state)?;
                let h = kinetic.add(&u)?;
                self.sweep(state, &h, dtau, &mut discarded)?
            }
        };
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QgpeError::Collapse(format!("state norm became {norm}")));
        }
        self.time += self.config.dt;
        let report = StepReport {
            time: self.time,
            norm,
            max_bond: next.max_bond(),
            discarded_weight: discarded,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        Ok((next, report))
    }
}

/// One step from a fresh [`Evolver`].
pub fn step(state: &MpsState, config: &EvolutionConfig) -> Result<(MpsState, StepReport)> {
    Evolver::new(state.grid(), config.clone())?.step(state)
}

/// Diagnostic invoked every `every` steps (and at step 0) with the step
/// index, time and state.
pub struct Callback<'a> {
    pub every: usize,
    pub f: Box<dyn FnMut(usize, f64, &MpsState) + 'a>,
}

impl<'a> Callback<'a> {
    pub fn new(every: usize, f: impl FnMut(usize, f64, &MpsState) + 'a) -> Self {
        Callback { every: every.max(1), f: Box::new(f) }
    }
}

/// Outcome of [`evolve`]. On failure `state` is the last good state and
/// `reports` holds every completed step.
#[derive(Debug)]
pub struct Evolution {
    pub state: MpsState,
    pub reports: Vec<StepReport>,
    pub failure: Option<QgpeError>,
}

impl Evolution {
    pub fn into_result(self) -> Result<(MpsState, Vec<StepReport>)> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok((self.state, self.reports)),
        }
    }
}

/// Run `config.n_steps()` steps, calling every callback on its cadence.
pub fn evolve(state: &MpsState, config: &EvolutionConfig, callbacks: &mut [Callback<'_>]) -> Evolution {
    let mut evolver = match Evolver::new(state.grid(), config.clone()) {
        Ok(e) => e,
        Err(e) => return Evolution { state: state.clone(), reports: Vec::new(), failure: Some(e) },
    };
    evolve_with(&mut evolver, state, config.n_steps(), callbacks)
}

/// [`evolve`] with an existing stepper, for resumed runs.
pub fn evolve_with(evolver: &mut Evolver, state: &MpsState, steps: usize, callbacks: &mut [Callback<'_>]) -> Evolution {
    let mut current = state.clone();
    let mut reports = Vec::with_capacity(steps);
    for cb in callbacks.iter_mut() {
        (cb.f)(0, evolver.time(), &current);
    }
    for k in 1..=steps {
        match evolver.step(&current) {
            Ok((next, report)) => {
                current = next;
                reports.push(report);
            }
            Err(e) => return Evolution { state: current, reports, failure: Some(e) },
        }
        for cb in callbacks.iter_mut() {
            if k % cb.every == 0 {
                (cb.f)(k, evolver.time(), &current);
            }
        }
    }
    Evolution { state: current, reports, failure: None }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryTimeOptions {
    /// Project out the uniform component before and after every step.
    pub remove_ground_state: bool,
    /// Rescale the particle number to `(μ/g)·L^d` after every step.
    pub renormalize: bool,
}

/// `ψ − (⟨1|ψ⟩/⟨1|1⟩)·1`, compressed; errors when nothing is left.
pub fn remove_uniform_component(state: &MpsState, policy: &TruncationPolicy) -> Result<MpsState> {
    let ones = MpsState::ones(state.grid().clone());
    let coeff = ones.overlap(state)? / C64::from(ones.norm_sqr());
    let before = state.norm();
    let out = MpsState::linear_combination(&[(C64::from(1.0), state), (-coeff, &ones)], policy)?;
    if out.norm() <= 1e-12 * before {
        return Err(QgpeError::Domain("state collapsed to zero after removing the uniform component".into()));
    }
    Ok(out)
}

/// `Σ|ψ|² h^d`.
pub fn particle_number(state: &MpsState) -> f64 {
    state.norm_sqr() * state.grid().cell_volume()
}

/// Imaginary-time relaxation over `config.t_final`.
pub fn imaginary_time_evolve(state: &MpsState, config: &EvolutionConfig, options: ImaginaryTimeOptions) -> Result<MpsState> {
    if config.mode != TimeMode::ImaginaryTime {
        return Err(QgpeError::Argument("imaginary-time evolution needs mode = ImaginaryTime".into()));
    }
    let mut evolver = Evolver::new(state.grid(), config.clone())?;
    let target = config.background_density() * state.grid().volume();
    let finish = |s: MpsState| -> Result<MpsState> {
        let s = if options.remove_ground_state { remove_uniform_component(&s, &config.policy)? } else { s };
        if options.renormalize {
            let np = particle_number(&s);
            if np <= 0.0 {
                return Err(QgpeError::Collapse("zero particle number".into()));
            }
            Ok(s.scaled(C64::from((target / np).sqrt())))
        } else {
            Ok(s)
        }
    };
    let mut current = finish(state.clone())?;
    for _ in 0..config.n_steps() {
        let (next, _) = evolver.step(&current)?;
        current = finish(next)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScaleOrdering;
    use crate::mps::infidelity;
    use ndarray::Array2;
    use ndarray_linalg::{Eigh, UPLO};

    const CAP: u128 = 1 << 26;

    fn gaussian(grid: &QuanticsGrid, width: f64) -> MpsState {
        let l = grid.length();
        MpsState::encode_function(
            grid,
            |x: &[f64]| {
                let r2: f64 = x.iter().map(|&c| (c - l / 2.0).powi(2)).sum();
                C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
            },
            &TruncationPolicy::default(),
        )
        .unwrap()
    }

    /// `exp(−iτH)v` for Hermitian `H` through a dense eigendecomposition.
    fn dense_expm(h: &Array2<C64>, v: &Array1<C64>, tau: C64) -> Array1<C64> {
        let (vals, mut vecs) = h.eigh(UPLO::Lower).unwrap();
        let d = Array2::from_diag(&vals.mapv(C64::from));
        let rebuilt = vecs.dot(&d).dot(&vecs.t().mapv(|z| z.conj()));
        if (&rebuilt - h).iter().any(|z| z.norm() > 1e-8) {
            vecs.mapv_inplace(|z| z.conj());
        }
        let mut c = vecs.t().mapv(|z| z.conj()).dot(v);
        for (ci, &l) in c.iter_mut().zip(vals.iter()) {
            *ci *= (C64::new(0.0, -1.0) * tau * l).exp();
        }
        vecs.dot(&c)
    }

    #[test]
    fn zero_operator_leaves_state_unchanged() {
        let g = QuanticsGrid::new(1, 8, 16.0, ScaleOrdering::sequential()).unwrap();
        let psi = MpsState::random(g.clone(), 4, 5);
        let zero = MpoOperator::identity(&g).scaled(C64::from(0.0));
        let (out, _) = two_site_tdvp_sweep(&psi, &zero, C64::from(0.1), &TruncationPolicy::default(), &KrylovOptions::default())
            .unwrap();
        assert!(infidelity(&out, &psi).unwrap() < 1e-13);
    }

    #[test]
    fn kinetic_step_matches_dense_exponential() {
        let g = QuanticsGrid::new(1, 8, 32.0, ScaleOrdering::sequential()).unwrap();
        // Untruncated: ε bounds squared weights, so even 1e-16 allows ~1e-8 amplitude error.
        let exact = TruncationPolicy::exact();
        let psi = MpsState::encode_dense(&g, &gaussian(&g, 3.0).decode_to_dense().unwrap(), &exact).unwrap();
        let k = MpoOperator::laplacian_default(&g).unwrap().scaled(C64::from(-0.5));
        let dtau = C64::new(1.0, -1e-3) / 32.0;
        let (out, _) = two_site_tdvp_sweep(&psi, &k, dtau, &exact, &KrylovOptions::default()).unwrap();
        let exact = dense_expm(&k.to_dense(CAP).unwrap(), &Array1::from(psi.to_dense(CAP).unwrap()), dtau);
        let got = Array1::from(out.to_dense(CAP).unwrap());
        let err = (&got - &exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn undamped_kinetic_sweep_preserves_norm() {
        let g = QuanticsGrid::new(2, 4, 8.0, ScaleOrdering::stair()).unwrap();
        let psi = MpsState::random(g.clone(), 8, 2);
        let k = MpoOperator::laplacian_default(&g).unwrap().scaled(C64::from(-0.5));
        let (out, _) =
            two_site_tdvp_sweep(&psi, &k, C64::from(1.0 / 64.0), &TruncationPolicy::default(), &KrylovOptions::default()).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-10 * psi.norm());
    }

    #[test]
    fn uniform_state_is_stationary() {
        let g = QuanticsGrid::new(2, 4, 8.0, ScaleOrdering::stair()).unwrap();
        let psi = MpsState::ones(g.clone());
        for splitting in [Splitting::Strang2, Splitting::Lie1, Splitting::NoSplit] {
            let config = EvolutionConfig { splitting, gamma: 0.01, t_final: 0.25, dt: 1.0 / 64.0, ..Default::default() };
            let (out, reports) = evolve(&psi, &config, &mut []).into_result().unwrap();
            assert_eq!(reports.len(), 16);
            assert!(infidelity(&out, &psi).unwrap() < 1e-12);
            assert!((out.norm() - psi.norm()).abs() < 1e-10 * psi.norm());
        }
    }

    #[test]
    fn zero_steps_is_identity_and_callbacks_fire() {
        let g = QuanticsGrid::new(1, 6, 8.0, ScaleOrdering::sequential()).unwrap();
        let psi = gaussian(&g, 1.0);
        let mut seen = Vec::new();
        {
            let mut cbs = [Callback::new(1, |k, t, _s: &MpsState| seen.push((k, t)))];
            let out = evolve(&psi, &EvolutionConfig::default(), &mut cbs);
            assert!(out.reports.is_empty());
            assert!(infidelity(&out.state, &psi).unwrap() < 1e-14);
        }
        assert_eq!(seen, vec![(0, 0.0)]);
    }

    #[test]
    fn zero_state_is_rejected() {
        let g = QuanticsGrid::new(1, 6, 8.0, ScaleOrdering::sequential()).unwrap();
        let zero = MpsState::constant(g, C64::from(0.0));
        assert!(matches!(step(&zero, &EvolutionConfig::default()), Err(QgpeError::Domain(_))));
    }

    #[test]
    fn imaginary_time_keeps_uniform_ground_state() {
        let g = QuanticsGrid::new(1, 7, 32.0, ScaleOrdering::sequential()).unwrap();
        let psi = MpsState::ones(g.clone());
        let config = EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: 1.0, ..Default::default() };
        let out = imaginary_time_evolve(&psi, &config, ImaginaryTimeOptions { remove_ground_state: false, renormalize: true })
            .unwrap();
        assert!(infidelity(&out, &psi).unwrap() < 1e-10);
        assert!((particle_number(&out) - 32.0).abs() < 1e-9);
        let removed = imaginary_time_evolve(&psi, &config, ImaginaryTimeOptions { remove_ground_state: true, renormalize: false });
        assert!(matches!(removed, Err(QgpeError::Domain(_))));
        let real = EvolutionConfig { t_final: 1.0, ..Default::default() };
        assert!(imaginary_time_evolve(&psi, &real, ImaginaryTimeOptions::default()).is_err());
    }

    #[test]
    fn imaginary_time_damps_high_modes() {
        // Relative weight of a short-wavelength ripple on the background decays.
        let g = QuanticsGrid::new(1, 7, 32.0, ScaleOrdering::sequential()).unwrap();
        let ripple = |x: &[f64]| C64::new(1.0 + 0.1 * (2.0 * std::f64::consts::PI * 8.0 * x[0] / 32.0).cos(), 0.0);
        let psi = MpsState::encode_function(&g, ripple, &TruncationPolicy::default()).unwrap();
        let config = EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: 1.0, ..Default::default() };
        let out = imaginary_time_evolve(&psi, &config, ImaginaryTimeOptions { remove_ground_state: false, renormalize: true })
            .unwrap();
        let ones = MpsState::ones(g.clone());
        assert!(infidelity(&out, &ones).unwrap() < 0.1 * infidelity(&psi, &ones).unwrap());
    }

    #[test]
    fn config_validation_and_dtau() {
        assert!(EvolutionConfig { g_int: 0.0, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { gamma: -1.0, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        let c = EvolutionConfig { gamma: 0.5, dt: 0.25, ..Default::default() };
        assert_eq!(c.dtau(), C64::new(0.25, -0.125));
        let i = EvolutionConfig { mode: TimeMode::ImaginaryTime, dt: 0.25, ..Default::default() };
        assert_eq!(i.dtau(), C64::new(0.0, -0.25));
        assert_eq!(EvolutionConfig { t_final: 1.0, dt: 1.0 / 32.0, ..Default::default() }.n_steps(), 32);
    }
}
