//! Dense split-step Fourier solver: the reference for every MPS benchmark.

use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::error::{QgpeError, Result};
use crate::fourier::{wavevectors, FftNd};
use crate::grid::QuanticsGrid;
use crate::mps::MpsState;
use crate::tdvp::{EvolutionConfig, Splitting, StepReport, TimeMode};
use crate::truncation::TruncationPolicy;

/// Largest grid the dense solver accepts.
pub const DENSE_POINT_CAP: u128 = 1 << 27;

/// Complex samples over the full grid, row-major with axis order x, y, z.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseField {
    grid: QuanticsGrid,
    values: Vec<C64>,
}

impl DenseField {
    pub fn new(grid: QuanticsGrid, values: Vec<C64>) -> Result<Self> {
        let points = grid.total_points();
        if points > DENSE_POINT_CAP {
            return Err(QgpeError::SizeCap { requested: points, cap: DENSE_POINT_CAP });
        }
        if values.len() as u128 != points {
            return Err(QgpeError::Argument(format!("grid has {points} points, got {} values", values.len())));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QgpeError::Domain("dense field has non-finite entries".into()));
        }
        Ok(DenseField { grid, values })
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: QuanticsGrid, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let points = grid.total_points();
        if points > DENSE_POINT_CAP {
            return Err(QgpeError::SizeCap { requested: points, cap: DENSE_POINT_CAP });
        }
        let shape = grid.shape();
        let values = (0..points as usize)
            .map(|mut r| {
                let mut idx = vec![0usize; shape.len()];
                for axis in (0..shape.len()).rev() {
                    idx[axis] = r % shape[axis];
                    r /= shape[axis];
                }
                f(&grid.coordinates(&idx))
            })
            .collect();
        DenseField::new(grid, values)
    }

    pub fn from_mps(state: &MpsState) -> Result<Self> {
        let values = state.to_dense(DENSE_POINT_CAP)?;
        DenseField::new(state.grid().clone(), values)
    }

    pub fn to_mps(&self, policy: &TruncationPolicy) -> Result<MpsState> {
        MpsState::encode_dense_with_cap(&self.grid, &self.values, policy, DENSE_POINT_CAP)
    }

    pub fn grid(&self) -> &QuanticsGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grid.shape()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `Σ|ψ|² h^d`.
    pub fn particle_number(&self) -> f64 {
        self.norm_sqr() * self.grid.cell_volume()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Periodic translation by `offset` grid points along `axis`.
    pub fn rolled(&self, axis: usize, offset: isize) -> Self {
        let shape = self.shape();
        let n = shape[axis] as isize;
        let stride: usize = shape[axis + 1..].iter().product();
        let mut out = self.values.clone();
        for (r, v) in self.values.iter().enumerate() {
            let j = ((r / stride) % shape[axis]) as isize;
            let target = (j + offset).rem_euclid(n) as usize;
            let dest = r - (j as usize) * stride + target * stride;
            out[dest] = *v;
        }
        DenseField { grid: self.grid.clone(), values: out }
    }
}

/// Options for [`DnsSolver::imaginary_time`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DnsImaginaryOptions {
    /// Restore the initial phase after every step (1D soliton gases).
    pub fix_phase: bool,
    /// Subtract the mean (uniform component) after every step.
    pub remove_ground_state: bool,
    /// Rescale the particle number to `(μ/g)·L^d` after every step.
    pub renormalize: bool,
}

/// Split-step Fourier stepper with cached plans and kinetic phases.
#[derive(Debug)]
pub struct DnsSolver {
    config: EvolutionConfig,
    fft: FftNd,
    /// `k²/2` per row-major Fourier index.
    kinetic: Vec<f64>,
    time: f64,
}

impl DnsSolver {
    pub fn new(grid: &QuanticsGrid, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        if config.splitting == Splitting::NoSplit {
            return Err(QgpeError::Argument("the Fourier solver needs a split propagator".into()));
        }
        let points = grid.total_points();
        if points > DENSE_POINT_CAP {
            return Err(QgpeError::SizeCap { requested: points, cap: DENSE_POINT_CAP });
        }
        let shape = grid.shape();
        let kinetic = wavevectors(&shape, grid.length())
            .into_iter()
            .map(|k| 0.5 * k.iter().map(|c| c * c).sum::<f64>())
            .collect();
        Ok(DnsSolver { config, fft: FftNd::new(&shape), kinetic, time: 0.0 })
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

    fn kinetic_step(&self, values: &mut [C64], tau: C64) {
        self.fft.forward(values);
        let minus_i_tau = C64::new(0.0, -1.0) * tau;
        for (z, &e) in values.iter_mut().zip(&self.kinetic) {
            *z *= (minus_i_tau * e).exp();
        }
        self.fft.inverse(values);
    }

    fn interaction_step(&self, values: &mut [C64], tau: C64) {
        let minus_i_tau = C64::new(0.0, -1.0) * tau;
        let (g, mu) = (self.config.g_int, self.config.mu);
        for z in values.iter_mut() {
            *z *= (minus_i_tau * (g * z.norm_sqr() - mu)).exp();
        }
    }

    /// Advance one timestep in place.
    pub fn step(&mut self, field: &mut DenseField) -> Result<StepReport> {
        let start = Instant::now();
        if field.shape() != self.fft.shape() {
            return Err(QgpeError::GridMismatch("field does not match the solver grid".into()));
        }
        let dtau = self.config.dtau();
        match self.config.splitting {
            Splitting::Strang2 => {
                self.kinetic_step(&mut field.values, dtau * 0.5);
                self.interaction_step(&mut field.values, dtau);
                self.kinetic_step(&mut field.values, dtau * 0.5);
            }
            Splitting::Lie1 => {
                self.interaction_step(&mut field.values, dtau);
                self.kinetic_step(&mut field.values, dtau);
            }
            Splitting::NoSplit => unreachable!("rejected at construction"),
        }
        let norm = field.norm();
        if !norm.is_finite() {
            return Err(QgpeError::Collapse("dense field diverged".into()));
        }
        self.time += self.config.dt;
        Ok(StepReport {
            time: self.time,
            norm,
            max_bond: 0,
            discarded_weight: 0.0,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// `steps` steps with `observe(step, time, field)` at step 0 and after every `every` steps.
    pub fn evolve(
        &mut self,
        field: &mut DenseField,
        steps: usize,
        every: usize,
        mut observe: impl FnMut(usize, f64, &DenseField),
    ) -> Result<Vec<StepReport>> {
        let every = every.max(1);
        observe(0, self.time, field);
        let mut reports = Vec::with_capacity(steps);
        for k in 1..=steps {
            reports.push(self.step(field)?);
            if k % every == 0 {
                observe(k, self.time, field);
            }
        }
        Ok(reports)
    }

    /// Imaginary-time relaxation over `config.t_final`.
    pub fn imaginary_time(&mut self, field: &mut DenseField, options: DnsImaginaryOptions) -> Result<()> {
        if self.config.mode != TimeMode::ImaginaryTime {
            return Err(QgpeError::Argument("imaginary-time evolution needs mode = ImaginaryTime".into()));
        }
        let phase: Vec<C64> = field.values.iter().map(|z| C64::from_polar(1.0, z.arg())).collect();
        let target = self.config.background_density() * field.grid.volume();
        let finish = |f: &mut DenseField| -> Result<()> {
            if options.remove_ground_state {
                let before = f.norm();
                let mean = f.values.iter().sum::<C64>() / f.values.len() as f64;
                f.values.iter_mut().for_each(|z| *z -= mean);
                if f.norm() <= 1e-12 * before {
                    return Err(QgpeError::Domain("field collapsed after removing the uniform component".into()));
                }
            }
            if options.fix_phase {
                for (z, p) in f.values.iter_mut().zip(&phase) {
                    *z = p * z.norm();
                }
            }
            if options.renormalize {
                let np = f.particle_number();
                if np <= 0.0 {
                    return Err(QgpeError::Collapse("zero particle number".into()));
                }
                let s = (target / np).sqrt();
                f.values.iter_mut().for_each(|z| *z *= s);
            }
            Ok(())
        };
        finish(field)?;
        for _ in 0..self.config.n_steps() {
            self.step(field)?;
            finish(field)?;
        }
        Ok(())
    }
}

/// One step from a fresh solver.
pub fn dns_step(field: &DenseField, config: &EvolutionConfig) -> Result<DenseField> {
    let mut out = field.clone();
    DnsSolver::new(field.grid(), config.clone())?.step(&mut out)?;
    Ok(out)
}

/// `config.n_steps()` steps; returns the final field and every step report.
pub fn dns_evolve(field: &DenseField, config: &EvolutionConfig) -> Result<(DenseField, Vec<StepReport>)> {
    let mut out = field.clone();
    let mut solver = DnsSolver::new(field.grid(), config.clone())?;
    let reports = solver.evolve(&mut out, config.n_steps(), usize::MAX, |_, _, _| {})?;
    Ok((out, reports))
}

/// Imaginary-time relaxation of a copy of `field`.
pub fn dns_imaginary_time(field: &DenseField, config: &EvolutionConfig, options: DnsImaginaryOptions) -> Result<DenseField> {
    let mut out = field.clone();
    DnsSolver::new(field.grid(), config.clone())?.imaginary_time(&mut out, options)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScaleOrdering;
    use crate::mps::dense_infidelity;
    use crate::tdvp::Evolver;
    use std::f64::consts::PI;

    fn grid(d: usize, n: usize, l: f64) -> QuanticsGrid {
        QuanticsGrid::new(d, n, l, ScaleOrdering::stair()).unwrap()
    }

    #[test]
    fn uniform_ground_state_is_stationary() {
        let g = grid(2, 5, 8.0);
        let field = DenseField::from_fn(g, |_| C64::new(1.0, 0.0)).unwrap();
        let config = EvolutionConfig { gamma: 0.01, t_final: 1.0, ..Default::default() };
        let (out, _) = dns_evolve(&field, &config).unwrap();
        for z in out.values() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let imag = EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: 1.0, ..Default::default() };
        let relaxed = dns_imaginary_time(&field, &imag, DnsImaginaryOptions::default()).unwrap();
        assert!(dense_infidelity(relaxed.values(), field.values()).unwrap() < 1e-14);
    }

    #[test]
    fn free_plane_wave_rotates_by_its_frequency() {
        let (n, l) = (6usize, 16.0);
        let q = 2.0 * PI * 3.0 / l;
        let g = grid(1, n, l);
        let field = DenseField::from_fn(g, |x| C64::from_polar(0.01, q * x[0])).unwrap();
        let config = EvolutionConfig { g_int: 1e-300, mu: 0.0, t_final: 0.5, dt: 1.0 / 32.0, ..Default::default() };
        let (out, _) = dns_evolve(&field, &config).unwrap();
        let rot = C64::from_polar(1.0, -0.5 * q * q * 0.5);
        for (a, b) in out.values().iter().zip(field.values()) {
            assert!((a - b * rot).norm() < 1e-13);
        }
    }

    #[test]
    fn undamped_steps_conserve_particle_number() {
        let g = grid(2, 5, 16.0);
        let field = DenseField::from_fn(g, |x| {
            C64::new(1.0 + 0.3 * (2.0 * PI * x[0] / 16.0).sin(), 0.2 * (2.0 * PI * x[1] / 8.0).cos())
        })
        .unwrap();
        let config = EvolutionConfig { dt: 1.0 / 64.0, ..Default::default() };
        let mut out = field.clone();
        let mut solver = DnsSolver::new(field.grid(), config).unwrap();
        let start = field.particle_number();
        for _ in 0..100 {
            solver.step(&mut out).unwrap();
        }
        assert!(((out.particle_number() - start) / start).abs() < 1e-10);
    }

    #[test]
    fn strang_error_shrinks_fourfold_when_halving_dt() {
        let g = grid(1, 6, 16.0);
        let field = DenseField::from_fn(g, |x| {
            C64::new(1.0 + 0.4 * (2.0 * PI * x[0] / 16.0).cos(), 0.3 * (4.0 * PI * x[0] / 16.0).sin())
        })
        .unwrap();
        let run = |dt: f64| {
            dns_evolve(&field, &EvolutionConfig { dt, t_final: 2.0, ..Default::default() }).unwrap().0.into_values()
        };
        let reference = run(1.0 / 1024.0);
        let err = |v: Vec<C64>| v.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let coarse = err(run(1.0 / 16.0));
        let fine = err(run(1.0 / 32.0));
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn translation_equivariance() {
        let g = grid(2, 4, 8.0);
        let field = DenseField::from_fn(g, |x| C64::new((x[0] * 0.8).sin() + 1.2, (x[1] * 0.8).cos())).unwrap();
        let config = EvolutionConfig { gamma: 0.1, dt: 1.0 / 64.0, ..Default::default() };
        let a = dns_step(&field.rolled(1, 3), &config).unwrap();
        let b = dns_step(&field, &config).unwrap().rolled(1, 3);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn agrees_with_untruncated_mps_step() {
        let g = grid(2, 4, 8.0);
        let field = DenseField::from_fn(g.clone(), |x| {
            C64::new(1.0 + 0.2 * (2.0 * PI * x[0] / 8.0).sin(), 0.1 * (2.0 * PI * x[1] / 8.0).cos())
        })
        .unwrap();
        let exact = TruncationPolicy::exact();
        let config = EvolutionConfig { policy: exact, dt: 1.0 / 64.0, density_sweeps: 4, ..Default::default() };
        let psi = field.to_mps(&exact).unwrap();
        let (mps_next, _) = Evolver::new(&g, config.clone()).unwrap().step(&psi).unwrap();
        let dns_next = dns_step(&field, &config).unwrap();
        // The two Laplacians differ (eighth-order stencil against spectral), so
        // the comparison uses a band-limited field where both are accurate.
        let i = dense_infidelity(&mps_next.to_dense(1 << 20).unwrap(), dns_next.values()).unwrap();
        assert!(i < 1e-9, "per-step infidelity {i}");
    }

    #[test]
    fn fix_phase_and_ground_state_options() {
        let g = grid(1, 6, 16.0);
        let field = DenseField::from_fn(g, |x| C64::from_polar(1.0 + 0.5 * (x[0]).sin(), 2.0 * PI * x[0] / 16.0)).unwrap();
        let config = EvolutionConfig { mode: TimeMode::ImaginaryTime, t_final: 0.5, ..Default::default() };
        let options = DnsImaginaryOptions { fix_phase: true, remove_ground_state: false, renormalize: true };
        let out = dns_imaginary_time(&field, &config, options).unwrap();
        for (a, b) in out.values().iter().zip(field.values()) {
            assert!((a.arg() - b.arg()).abs() < 1e-12 || a.norm() < 1e-12);
        }
        assert!((out.particle_number() - 16.0).abs() < 1e-9);
        let uniform = DenseField::from_fn(grid(1, 5, 8.0), |_| C64::new(1.0, 0.0)).unwrap();
        let gs = DnsImaginaryOptions { remove_ground_state: true, ..Default::default() };
        assert!(matches!(dns_imaginary_time(&uniform, &config, gs), Err(QgpeError::Domain(_))));
    }

    #[test]
    fn size_cap_and_splitting_rejections() {
        let big = QuanticsGrid::new(3, 10, 32.0, ScaleOrdering::stair()).unwrap();
        assert!(matches!(DnsSolver::new(&big, EvolutionConfig::default()), Err(QgpeError::SizeCap { .. })));
        let g = grid(1, 4, 4.0);
        let c = EvolutionConfig { splitting: Splitting::NoSplit, ..Default::default() };
        assert!(DnsSolver::new(&g, c).is_err());
    }
}
