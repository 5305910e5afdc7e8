//! Dense kernels shared by the tensor-network code: truncated SVD and thin QR.

use ndarray::{s, Array2};
use ndarray_linalg::{JobSvd, QR, SVD, SVDDC};
use num_complex::Complex64 as C64;

use crate::error::{QgpeError, Result};
use crate::truncation::TruncationPolicy;

/// `m ≈ u · diag(s) · vt` after truncation.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: Array2<C64>,
    pub s: Vec<f64>,
    pub vt: Array2<C64>,
    /// Normalized weight of the dropped singular values.
    pub discarded: f64,
    /// Every singular value before truncation, descending.
    pub spectrum: Vec<f64>,
}

fn full_svd(m: &Array2<C64>) -> Result<(Array2<C64>, Vec<f64>, Array2<C64>)> {
    let k = m.nrows().min(m.ncols());
    match m.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s.to_vec(), vt)),
        _ => {
            // Divide and conquer occasionally fails to converge; fall back to QR iteration.
            let (u, s, vt) = m.svd(true, true)?;
            let u = u.ok_or_else(|| QgpeError::Linalg("svd returned no U".into()))?;
            let vt = vt.ok_or_else(|| QgpeError::Linalg("svd returned no Vt".into()))?;
            Ok((u.slice(s![.., ..k]).to_owned(), s.to_vec(), vt.slice(s![..k, ..]).to_owned()))
        }
    }
}

/// SVD truncated according to `policy`. The retained rank is at least one.
pub fn svd_truncated(m: &Array2<C64>, policy: &TruncationPolicy) -> Result<TruncatedSvd> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QgpeError::Linalg("non-finite entries before SVD".into()));
    }
    let (u, s, vt) = full_svd(m)?;
    let (keep, discarded) = policy.retained(&s);
    Ok(TruncatedSvd {
        u: u.slice(s![.., ..keep]).to_owned(),
        s: s[..keep].to_vec(),
        vt: vt.slice(s![..keep, ..]).to_owned(),
        discarded,
        spectrum: s,
    })
}

/// Thin QR: `m = q · r` with `q` having orthonormal columns.
pub fn qr_thin(m: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = m.qr()?;
    Ok((q, r))
}

/// Thin LQ: `m = l · q` with `q` having orthonormal rows.
pub fn lq_thin(m: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let mh = m.t().mapv(|z| z.conj());
    let (q, r) = mh.qr()?;
    Ok((r.t().mapv(|z| z.conj()), q.t().mapv(|z| z.conj())))
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn untruncated_svd_reconstructs() {
        for (r, c) in [(5, 9), (9, 5), (4, 4)] {
            let m = random(r, c, 3);
            let t = svd_truncated(&m, &TruncationPolicy::exact()).unwrap();
            let us = &t.u * &ndarray::Array1::from(t.s.iter().map(|&v| C64::from(v)).collect::<Vec<_>>());
            assert!(max_diff(&us.dot(&t.vt), &m) < 1e-12);
            assert_eq!(t.discarded, 0.0);
        }
    }

    #[test]
    fn truncation_error_matches_discarded_weight() {
        let m = random(8, 8, 11);
        let p = TruncationPolicy::with_chi_max(3).unwrap();
        let t = svd_truncated(&m, &p).unwrap();
        let us = &t.u * &ndarray::Array1::from(t.s.iter().map(|&v| C64::from(v)).collect::<Vec<_>>());
        let err: f64 = (&us.dot(&t.vt) - &m).iter().map(|z| z.norm_sqr()).sum();
        let norm: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        assert!((err / norm - t.discarded).abs() < 1e-12);
    }

    #[test]
    fn qr_and_lq_factorize() {
        let m = random(6, 3, 5);
        let (q, r) = qr_thin(&m).unwrap();
        assert!(max_diff(&q.dot(&r), &m) < 1e-12);
        assert!(max_diff(&dagger(&q).dot(&q), &Array2::eye(3)) < 1e-12);
        let w = random(3, 6, 7);
        let (l, q) = lq_thin(&w).unwrap();
        assert!(max_diff(&l.dot(&q), &w) < 1e-12);
        assert!(max_diff(&q.dot(&dagger(&q)), &Array2::eye(3)) < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = random(2, 2, 1);
        m[[0, 0]] = C64::new(f64::NAN, 0.0);
        assert!(svd_truncated(&m, &TruncationPolicy::exact()).is_err());
    }
}
