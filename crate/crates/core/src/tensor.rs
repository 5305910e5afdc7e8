//! Pairwise tensor contraction on top of BLAS matrix products.

use std::cell::Cell;

use ndarray::{Array2, ArrayD, ArrayViewD, IxDyn};
use num_complex::Complex64 as C64;

thread_local! {
    static MULTIPLY_ADDS: Cell<u128> = const { Cell::new(0) };
}

/// Complex multiply-adds issued by [`tensordot`] on this thread since the last reset.
pub fn multiply_adds() -> u128 {
    MULTIPLY_ADDS.with(|c| c.get())
}

pub fn reset_multiply_adds() {
    MULTIPLY_ADDS.with(|c| c.set(0));
}

/// Contract axes `ax_a` of `a` with axes `ax_b` of `b`. The result carries the
/// free axes of `a` followed by the free axes of `b`, each in original order.
///
/// Panics if the contracted extents differ.
pub fn tensordot(a: ArrayViewD<C64>, ax_a: &[usize], b: ArrayViewD<C64>, ax_b: &[usize]) -> ArrayD<C64> {
    assert_eq!(ax_a.len(), ax_b.len(), "contraction axis count mismatch");
    for (&i, &j) in ax_a.iter().zip(ax_b) {
        assert_eq!(a.shape()[i], b.shape()[j], "contracted extents differ");
    }
    let free_a: Vec<usize> = (0..a.ndim()).filter(|i| !ax_a.contains(i)).collect();
    let free_b: Vec<usize> = (0..b.ndim()).filter(|i| !ax_b.contains(i)).collect();
    let m: usize = free_a.iter().map(|&i| a.shape()[i]).product();
    let k: usize = ax_a.iter().map(|&i| a.shape()[i]).product();
    let n: usize = free_b.iter().map(|&i| b.shape()[i]).product();
    let perm_a: Vec<usize> = free_a.iter().chain(ax_a).copied().collect();
    let perm_b: Vec<usize> = ax_b.iter().chain(&free_b).copied().collect();
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape()[i])
        .chain(free_b.iter().map(|&i| b.shape()[i]))
        .collect();
    let a2 = matricize(a.permuted_axes(perm_a), m, k);
    let b2 = matricize(b.permuted_axes(perm_b), k, n);
    MULTIPLY_ADDS.with(|c| c.set(c.get() + (m as u128) * (k as u128) * (n as u128)));
    let c = a2.dot(&b2);
    c.into_shape_with_order(IxDyn(&shape)).expect("contraction result has consistent size")
}

fn matricize(v: ArrayViewD<C64>, rows: usize, cols: usize) -> Array2<C64> {
    v.as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, cols))
        .expect("matricized size matches")
}

/// Copy with permuted axes into standard layout.
pub fn permute(a: ArrayViewD<C64>, perm: &[usize]) -> ArrayD<C64> {
    a.permuted_axes(perm.to_vec()).as_standard_layout().into_owned()
}

/// Reshape into standard layout (copying only when needed).
pub fn reshape(a: ArrayD<C64>, shape: &[usize]) -> ArrayD<C64> {
    a.as_standard_layout()
        .into_owned()
        .into_shape_with_order(IxDyn(shape))
        .expect("reshape preserves size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    #[test]
    fn matches_explicit_sum() {
        let a = Array::from_shape_fn(IxDyn(&[2, 3, 4]), |i| C64::new((i[0] + 2 * i[1]) as f64, i[2] as f64));
        let b = Array::from_shape_fn(IxDyn(&[4, 5, 2]), |i| C64::new(i[0] as f64 - 1.0, (i[1] * i[2]) as f64));
        reset_multiply_adds();
        let c = tensordot(a.view(), &[0, 2], b.view(), &[2, 0]);
        assert_eq!(c.shape(), &[3, 5]);
        assert_eq!(multiply_adds(), 3 * 8 * 5);
        for j in 0..3 {
            for l in 0..5 {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..2 {
                    for k in 0..4 {
                        s += a[IxDyn(&[i, j, k])] * b[IxDyn(&[k, l, i])];
                    }
                }
                assert!((c[IxDyn(&[j, l])] - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn outer_product_when_nothing_contracts() {
        let a = Array::from_elem(IxDyn(&[2]), C64::new(2.0, 0.0));
        let b = Array::from_elem(IxDyn(&[3]), C64::new(0.0, 1.0));
        let c = tensordot(a.view(), &[], b.view(), &[]);
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c[IxDyn(&[1, 2])], C64::new(0.0, 2.0));
    }
}
