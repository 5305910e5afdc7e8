//! Lanczos approximation of `exp(-i τ H) v` for Hermitian `H` and complex `τ`.
//!
//! `H` is only accessed through matrix-vector products. The Krylov basis is
//! fully reorthogonalized; the projected tridiagonal matrix is real symmetric,
//! so the small exponential comes from its eigendecomposition.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{QgpeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Maximum Krylov subspace dimension.
    pub dim: usize,
    /// Target error relative to `‖v‖`.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { dim: 30, tol: 1e-12 }
    }
}

/// Outcome of one Krylov exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovInfo {
    pub dim: usize,
    pub error_estimate: f64,
}

fn dot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &Array1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Coefficients `exp(-i τ T) e_1` of the tridiagonal `T` with diagonal `alpha`
/// and off-diagonal `beta`.
fn small_expm(alpha: &[f64], beta: &[f64], tau: C64) -> Result<Vec<C64>> {
    let m = alpha.len();
    let mut t = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let (vals, vecs) = t.eigh(UPLO::Lower)?;
    let minus_i_tau = C64::new(0.0, -1.0) * tau;
    Ok((0..m)
        .map(|r| {
            (0..m)
                .map(|j| (minus_i_tau * vals[j]).exp() * vecs[[r, j]] * vecs[[0, j]])
                .sum()
        })
        .collect())
}

/// Approximate `exp(-i τ H) v`.
pub fn expm_multiply<F>(apply: F, v: &Array1<C64>, tau: C64, opts: &KrylovOptions) -> Result<(Array1<C64>, KrylovInfo)>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return Ok((v.clone(), KrylovInfo { dim: 0, error_estimate: 0.0 }));
    }
    if tau == C64::new(0.0, 0.0) {
        return Ok((v.clone(), KrylovInfo { dim: 0, error_estimate: 0.0 }));
    }
    let max_dim = opts.dim.max(1).min(v.len());
    let mut basis: Vec<Array1<C64>> = vec![v / C64::from(beta0)];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut estimate = f64::INFINITY;
    let mut coeffs = Vec::new();
    for j in 0..max_dim {
        let mut w = apply(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.scaled_add(-c, q);
            }
        }
        let b = norm(&w);
        let exhausted = b <= 1e-14 * (a.abs() + 1.0) || j + 1 == v.len();
        coeffs = small_expm(&alpha, &beta, tau)?;
        estimate = b * coeffs[j].norm();
        if exhausted {
            estimate = 0.0;
        }
        if estimate <= opts.tol || j + 1 == max_dim {
            break;
        }
        beta.push(b);
        basis.push(w / C64::from(b));
    }
    if estimate > opts.tol {
        return Err(QgpeError::Krylov { estimate, dim: alpha.len() });
    }
    let mut out = Array1::<C64>::zeros(v.len());
    for (q, c) in basis.iter().zip(coeffs.iter()) {
        out.scaled_add(*c * beta0, q);
    }
    Ok((out, KrylovInfo { dim: alpha.len(), error_estimate: estimate }))
}
