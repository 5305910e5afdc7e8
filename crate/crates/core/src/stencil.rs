//! Central finite-difference stencils from the Fornberg recursion.

use serde::{Deserialize, Serialize};

use crate::error::{QgpeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
}

/// Weights `c_k` such that `f^(m)(x) ≈ Σ_k c_k f(x + k h) / h^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilSpec {
    pub derivative: usize,
    pub accuracy: usize,
    pub offsets: Vec<i64>,
    pub coefficients: Vec<f64>,
    pub boundary: Boundary,
}

impl StencilSpec {
    /// Central stencil of the given even accuracy order.
    pub fn central(derivative: usize, accuracy: usize) -> Result<Self> {
        if derivative == 0 || accuracy == 0 || accuracy % 2 == 1 {
            return Err(QgpeError::Argument(format!(
                "central stencils need derivative ≥ 1 and even accuracy, got {derivative}, {accuracy}"
            )));
        }
        let half = ((derivative - 1) / 2 + accuracy / 2) as i64;
        let offsets: Vec<i64> = (-half..=half).collect();
        let nodes: Vec<f64> = offsets.iter().map(|&k| k as f64).collect();
        let weights = fornberg_weights(0.0, &nodes, derivative);
        Ok(StencilSpec {
            derivative,
            accuracy,
            offsets,
            coefficients: weights[derivative].clone(),
            boundary: Boundary::Periodic,
        })
    }

    /// Eighth-order second derivative, the default Laplacian stencil.
    pub fn laplacian_default() -> Self {
        Self::central(2, 8).expect("valid stencil")
    }

    /// Largest absolute offset.
    pub fn half_width(&self) -> usize {
        self.offsets.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

/// Fornberg's recursion: `w[m][j]` is the weight of node `j` for the `m`-th
/// derivative at `x0`, for every `m ≤ max_derivative`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_derivative: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_derivative + 1];
    if n == 0 {
        return c;
    }
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_derivative);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
