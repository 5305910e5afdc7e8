//! Environment tensors for `⟨bra| W |ket⟩` networks and effective local operators.
//!
//! Environments are stored as `[bra bond, operator bond, ket bond]`.

use ndarray::{Array3, Array4, ArrayD};
use num_complex::Complex64 as C64;

use crate::tensor::{permute, tensordot};

pub(crate) fn edge() -> Array3<C64> {
    Array3::from_elem((1, 1, 1), C64::new(1.0, 0.0))
}

fn to3(a: ArrayD<C64>) -> Array3<C64> {
    a.into_dimensionality().expect("rank 3")
}

/// Extend a left environment over one site.
pub(crate) fn grow_left(env: &Array3<C64>, bra: &Array3<C64>, op: &Array4<C64>, ket: &Array3<C64>) -> Array3<C64> {
    let x = tensordot(env.view().into_dyn(), &[2], ket.view().into_dyn(), &[0]); // [b, w, t, a']
    let y = tensordot(x.view(), &[1, 2], op.view().into_dyn(), &[0, 2]); // [b, a', s, w']
    let bc = bra.mapv(|z| z.conj());
    let z = tensordot(y.view(), &[0, 2], bc.view().into_dyn(), &[0, 1]); // [a', w', b']
    to3(permute(z.view(), &[2, 1, 0]))
}

/// Extend a right environment over one site.
pub(crate) fn grow_right(env: &Array3<C64>, bra: &Array3<C64>, op: &Array4<C64>, ket: &Array3<C64>) -> Array3<C64> {
    let x = tensordot(ket.view().into_dyn(), &[2], env.view().into_dyn(), &[2]); // [a, t, b', w']
    let y = tensordot(x.view(), &[1, 3], op.view().into_dyn(), &[2, 3]); // [a, b', w, s]
    let bc = bra.mapv(|z| z.conj());
    let z = tensordot(y.view(), &[1, 3], bc.view().into_dyn(), &[2, 1]); // [a, w, b]
    to3(permute(z.view(), &[2, 1, 0]))
}

/// `H_eff θ` for a two-site block `θ[a, t1, t2, a2]`; returns `[b, s1, s2, b2]`.
pub(crate) fn apply_two_site(
    left: &Array3<C64>,
    w1: &Array4<C64>,
    w2: &Array4<C64>,
    right: &Array3<C64>,
    theta: &ArrayD<C64>,
) -> ArrayD<C64> {
    let x = tensordot(left.view().into_dyn(), &[2], theta.view(), &[0]); // [b, w, t1, t2, a2]
    let y = tensordot(x.view(), &[1, 2], w1.view().into_dyn(), &[0, 2]); // [b, t2, a2, s1, w1]
    let z = tensordot(y.view(), &[1, 4], w2.view().into_dyn(), &[2, 0]); // [b, a2, s1, s2, w2]
    tensordot(z.view(), &[1, 4], right.view().into_dyn(), &[2, 1]) // [b, s1, s2, b2]
}

/// `H_eff A` for a single site `A[a, t, a2]`; returns `[b, s, b2]`.
pub(crate) fn apply_one_site(left: &Array3<C64>, w: &Array4<C64>, right: &Array3<C64>, site: &ArrayD<C64>) -> ArrayD<C64> {
    let x = tensordot(left.view().into_dyn(), &[2], site.view(), &[0]); // [b, w, t, a2]
    let y = tensordot(x.view(), &[1, 2], w.view().into_dyn(), &[0, 2]); // [b, a2, s, w1]
    tensordot(y.view(), &[1, 3], right.view().into_dyn(), &[2, 1]) // [b, s, b2]
}

/// Two ket tensors merged into `[a, t1, t2, a2]`.
pub(crate) fn merge(a: &Array3<C64>, b: &Array3<C64>) -> ArrayD<C64> {
    tensordot(a.view().into_dyn(), &[2], b.view().into_dyn(), &[0])
}

/// Right environments for sites `1..n` (`envs[i]` covers sites `i..n`), with
/// `envs[n]` the trivial edge. `envs[0]` is left as the edge placeholder.
pub(crate) fn right_environments(
    bra: &[Array3<C64>],
    ops: &[Array4<C64>],
    ket: &[Array3<C64>],
) -> Vec<Array3<C64>> {
    let n = ket.len();
    let mut envs = vec![edge(); n + 1];
    for i in (1..n).rev() {
        envs[i] = grow_right(&envs[i + 1], &bra[i], &ops[i], &ket[i]);
    }
    envs
}

