//! Multidimensional FFTs over row-major arrays, built from 1D `rustfft` plans.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

/// Forward transforms are unnormalized; inverse transforms divide by the
/// number of points.
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("shape", &self.shape).finish()
    }
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "array size does not match the FFT shape");
        let d = self.shape.len();
        for axis in 0..d {
            let n = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer: usize = self.shape[..axis].iter().product();
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![C64::new(0.0, 0.0); n];
            for o in 0..outer {
                let base = o * n * stride;
                for s in 0..stride {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride + s];
                    }
                    plan.process(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride + s] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Angular wavenumbers `2π·{0, 1, …, n/2 − 1, −n/2, …, −1}/length`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let half = n / 2;
    (0..n)
        .map(|j| {
            let m = if j < half { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * m / length
        })
        .collect()
}

/// Wavevector of every row-major index.
pub fn wavevectors(shape: &[usize], length: f64) -> Vec<Vec<f64>> {
    let per_axis: Vec<Vec<f64>> = shape.iter().map(|&n| wavenumbers(n, length)).collect();
    let total: usize = shape.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut k = vec![0.0; shape.len()];
            for axis in (0..shape.len()).rev() {
                k[axis] = per_axis[axis][idx % shape[axis]];
                idx /= shape[axis];
            }
            k
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft_in_two_dimensions() {
        let shape = [4usize, 8];
        let data: Vec<C64> = (0..32).map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos())).collect();
        let mut fast = data.clone();
        FftNd::new(&shape).forward(&mut fast);
        for a in 0..4 {
            for b in 0..8 {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..4 {
                    for y in 0..8 {
                        let ph = -2.0 * std::f64::consts::PI * ((a * x) as f64 / 4.0 + (b * y) as f64 / 8.0);
                        acc += data[x * 8 + y] * C64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - fast[a * 8 + b]).norm() < 1e-12);
            }
        }
        let fft = FftNd::new(&shape);
        fft.inverse(&mut fast);
        for (a, b) in fast.iter().zip(&data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn wavenumber_convention() {
        let k = wavenumbers(4, 2.0 * std::f64::consts::PI);
        assert_eq!(k, vec![0.0, 1.0, -2.0, -1.0]);
        let kv = wavevectors(&[2, 4], 2.0 * std::f64::consts::PI);
        assert_eq!(kv[5], vec![-1.0, 1.0]);
    }
}
