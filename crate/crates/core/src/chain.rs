//! Gauge sweeps shared by states and operators.
//!
//! A chain is a list of rank-3 tensors `(left bond, physical, right bond)`;
//! operators are handled by fusing their two physical legs.

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linalg::{lq_thin, qr_thin, svd_truncated};
use crate::truncation::TruncationPolicy;

pub(crate) fn as_left_matrix(t: &Array3<C64>) -> Array2<C64> {
    let (l, d, r) = t.dim();
    t.as_standard_layout().into_owned().into_shape_with_order((l * d, r)).expect("size")
}

pub(crate) fn as_right_matrix(t: &Array3<C64>) -> Array2<C64> {
    let (l, d, r) = t.dim();
    t.as_standard_layout().into_owned().into_shape_with_order((l, d * r)).expect("size")
}

pub(crate) fn from_left_matrix(m: Array2<C64>, l: usize, d: usize) -> Array3<C64> {
    let r = m.ncols();
    m.as_standard_layout().into_owned().into_shape_with_order((l, d, r)).expect("size")
}

pub(crate) fn from_right_matrix(m: Array2<C64>, d: usize, r: usize) -> Array3<C64> {
    let l = m.nrows();
    m.as_standard_layout().into_owned().into_shape_with_order((l, d, r)).expect("size")
}

/// `m · t` on the left bond of `t`.
pub(crate) fn absorb_left(m: &Array2<C64>, t: &Array3<C64>) -> Array3<C64> {
    let (_, d, r) = t.dim();
    from_right_matrix(m.dot(&as_right_matrix(t)), d, r)
}

/// `t · m` on the right bond of `t`.
pub(crate) fn absorb_right(t: &Array3<C64>, m: &Array2<C64>) -> Array3<C64> {
    let (l, d, _) = t.dim();
    from_left_matrix(as_left_matrix(t).dot(m), l, d)
}

/// Make sites `from..to` left-isometric, pushing the remainder into site `to`.
pub(crate) fn left_sweep(tensors: &mut [Array3<C64>], from: usize, to: usize) -> Result<()> {
    for i in from..to {
        let (l, d, _) = tensors[i].dim();
        let (q, r) = qr_thin(&as_left_matrix(&tensors[i]))?;
        tensors[i] = from_left_matrix(q, l, d);
        tensors[i + 1] = absorb_left(&r, &tensors[i + 1]);
    }
    Ok(())
}

/// Make sites `to+1..=from` right-isometric, pushing the remainder into site `to`.
pub(crate) fn right_sweep(tensors: &mut [Array3<C64>], from: usize, to: usize) -> Result<()> {
    for i in (to + 1..=from).rev() {
        let (_, d, r) = tensors[i].dim();
        let (lmat, q) = lq_thin(&as_right_matrix(&tensors[i]))?;
        tensors[i] = from_right_matrix(q, d, r);
        tensors[i - 1] = absorb_right(&tensors[i - 1], &lmat);
    }
    Ok(())
}

/// Bring the chain to mixed canonical form with orthogonality centre `center`.
pub(crate) fn canonicalize(tensors: &mut [Array3<C64>], center: usize) -> Result<()> {
    let n = tensors.len();
    left_sweep(tensors, 0, center)?;
    right_sweep(tensors, n - 1, center)
}

/// Truncate every bond of a chain whose orthogonality centre is the last
/// site, sweeping leftwards. Returns the summed discarded weight and leaves the
/// centre on site 0.
pub(crate) fn truncate_from_right(tensors: &mut [Array3<C64>], policy: &TruncationPolicy) -> Result<f64> {
    let mut discarded = 0.0;
    for i in (1..tensors.len()).rev() {
        let (_, d, r) = tensors[i].dim();
        let svd = svd_truncated(&as_right_matrix(&tensors[i]), policy)?;
        discarded += svd.discarded;
        let mut us = svd.u;
        for (mut col, &s) in us.columns_mut().into_iter().zip(&svd.s) {
            col.mapv_inplace(|z| z * s);
        }
        tensors[i] = from_right_matrix(svd.vt, d, r);
        tensors[i - 1] = absorb_right(&tensors[i - 1], &us);
    }
    Ok(discarded)
}

/// Canonicalize then truncate. Returns the summed discarded weight.
pub(crate) fn compress(tensors: &mut [Array3<C64>], policy: &TruncationPolicy) -> Result<f64> {
    let n = tensors.len();
    left_sweep(tensors, 0, n - 1)?;
    truncate_from_right(tensors, policy)
}

/// Frobenius norm squared of a tensor.
pub(crate) fn norm_sqr(t: &Array3<C64>) -> f64 {
    t.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨a|b⟩` for two chains with equal physical dimensions.
pub(crate) fn overlap(a: &[Array3<C64>], b: &[Array3<C64>]) -> C64 {
    let mut env = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for (ta, tb) in a.iter().zip(b) {
        // env[a, b] -> tmp[a, (s, b')] -> env'[a', b']
        let (_, d, rb) = tb.dim();
        let (la, _, ra) = ta.dim();
        let tmp = env.dot(&as_right_matrix(tb)); // (la, d*rb)
        let tmp = tmp.into_shape_with_order((la * d, rb)).expect("size");
        let am = as_left_matrix(ta); // (la*d, ra)
        env = am.t().mapv(|z| z.conj()).dot(&tmp);
        debug_assert_eq!(env.dim(), (ra, rb));
    }
    env[[0, 0]]
}
