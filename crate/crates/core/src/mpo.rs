//! Matrix product operators on quantics grids.
//!
//! Tensors are stored as `[w_left, out, in, w_right]`. Operators are built
//! from sums of products of single-qubit matrices and then compressed with
//! SVD sweeps, so any slot ordering works without hand-built tensors.

use ndarray::{s, Array2, Array3, Array4};
use num_complex::Complex64 as C64;

use crate::chain;
use crate::error::{QgpeError, Result};
use crate::grid::QuanticsGrid;
use crate::mps::MpsState;
use crate::stencil::StencilSpec;
use crate::tensor::{permute, reshape, tensordot};
use crate::truncation::TruncationPolicy;

/// Single-qubit matrix indexed `[out][in]`.
pub type LocalOp = [[C64; 2]; 2];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub const IDENTITY: LocalOp = [[ONE, ZERO], [ZERO, ONE]];
/// `|0⟩⟨1|`, lowers a bit.
pub const LOWER: LocalOp = [[ZERO, ONE], [ZERO, ZERO]];
/// `|1⟩⟨0|`, raises a bit.
pub const RAISE: LocalOp = [[ZERO, ZERO], [ONE, ZERO]];
pub const PROJ0: LocalOp = [[ONE, ZERO], [ZERO, ZERO]];
pub const PROJ1: LocalOp = [[ZERO, ZERO], [ZERO, ONE]];

/// `coefficient · ⊗_k factors[k]`, identity on unlisted sites.
#[derive(Clone, Debug)]
pub struct OperatorTerm {
    pub coefficient: C64,
    pub factors: Vec<(usize, LocalOp)>,
}

/// Periodic shift by one grid spacing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `R f(x) = f(x − h)`: sample `m` moves to `m + 1`.
    Right,
    /// `L f(x) = f(x + h)`: sample `m` moves to `m − 1`.
    Left,
}

#[derive(Clone, Debug)]
pub struct MpoOperator {
    pub(crate) tensors: Vec<Array4<C64>>,
    pub(crate) grid: QuanticsGrid,
}

fn operator_policy() -> TruncationPolicy {
    TruncationPolicy::with_eps(1e-16).expect("valid tolerance")
}

impl MpoOperator {
    pub fn from_tensors(grid: QuanticsGrid, tensors: Vec<Array4<C64>>) -> Result<Self> {
        if tensors.len() != grid.n_sites() {
            return Err(QgpeError::Argument("operator length does not match grid".into()));
        }
        let mut right = 1;
        for (i, t) in tensors.iter().enumerate() {
            let (l, o, p, r) = t.dim();
            if l != right || o != 2 || p != 2 || r == 0 {
                return Err(QgpeError::Argument(format!("operator tensor {i} has shape {:?}", t.dim())));
            }
            right = r;
        }
        if right != 1 {
            return Err(QgpeError::Argument("last operator tensor must have right bond 1".into()));
        }
        Ok(MpoOperator { tensors, grid })
    }

    pub fn identity(grid: &QuanticsGrid) -> Self {
        let tensors = (0..grid.n_sites())
            .map(|_| Array4::from_shape_fn((1, 2, 2, 1), |(_, o, i, _)| if o == i { ONE } else { ZERO }))
            .collect();
        MpoOperator { tensors, grid: grid.clone() }
    }

    /// Compile `Σ_t c_t ⊗ factors_t` and compress it.
    pub fn from_terms(grid: &QuanticsGrid, terms: &[OperatorTerm], policy: &TruncationPolicy) -> Result<Self> {
        let n = grid.n_sites();
        if terms.is_empty() {
            return Err(QgpeError::Argument("operator sum without terms".into()));
        }
        let local = |term: &OperatorTerm, site: usize| -> Result<LocalOp> {
            let mut op = IDENTITY;
            let mut seen = false;
            for (k, f) in &term.factors {
                if *k >= n {
                    return Err(QgpeError::Argument(format!("factor on site {k} outside chain of {n}")));
                }
                if *k == site {
                    if seen {
                        return Err(QgpeError::Argument(format!("two factors on site {k}")));
                    }
                    op = *f;
                    seen = true;
                }
            }
            Ok(op)
        };
        let t = terms.len();
        let mut tensors = Vec::with_capacity(n);
        for site in 0..n {
            let l = if site == 0 { 1 } else { t };
            let r = if site == n - 1 { 1 } else { t };
            let mut w = Array4::<C64>::zeros((l, 2, 2, r));
            for (j, term) in terms.iter().enumerate() {
                let op = local(term, site)?;
                let scale = if site == 0 { term.coefficient } else { ONE };
                let (wl, wr) = (if l == 1 { 0 } else { j }, if r == 1 { 0 } else { j });
                for o in 0..2 {
                    for i in 0..2 {
                        w[[wl, o, i, wr]] += scale * op[o][i];
                    }
                }
            }
            tensors.push(w);
        }
        MpoOperator { tensors, grid: grid.clone() }.compress(policy)
    }

    /// Exact periodic shift along `axis`.
    pub fn shift(grid: &QuanticsGrid, axis: usize, direction: ShiftDirection) -> Result<Self> {
        let terms = shift_terms(grid, axis, direction, &[])?;
        Self::from_terms(grid, &terms, &operator_policy())
    }

    /// `Σ_axes Σ_k c_k S^k / h²` for a second-derivative stencil, compressed
    /// after every product and sum.
    pub fn laplacian(grid: &QuanticsGrid, stencil: &StencilSpec, policy: &TruncationPolicy) -> Result<Self> {
        if stencil.derivative != 2 {
            return Err(QgpeError::Argument("laplacian needs a second-derivative stencil".into()));
        }
        let mut total: Option<MpoOperator> = None;
        for axis in 0..grid.dims() {
            if 2 * stencil.half_width() + 1 > grid.axis_points(axis) {
                return Err(QgpeError::Argument(format!(
                    "stencil of half-width {} wraps around {} points",
                    stencil.half_width(),
                    grid.axis_points(axis)
                )));
            }
            let h2 = grid.spacing(axis).powi(2);
            let left = Self::shift(grid, axis, ShiftDirection::Left)?;
            let right = Self::shift(grid, axis, ShiftDirection::Right)?;
            let mut left_pow = Self::identity(grid);
            let mut right_pow = Self::identity(grid);
            let mut axis_sum = Self::identity(grid).scaled(C64::from(coefficient(stencil, 0) / h2));
            for k in 1..=stencil.half_width() as i64 {
                left_pow = left.compose(&left_pow, policy)?;
                right_pow = right.compose(&right_pow, policy)?;
                let cp = coefficient(stencil, k) / h2;
                let cm = coefficient(stencil, -k) / h2;
                axis_sum = axis_sum.add(&left_pow.scaled(C64::from(cp)))?.compress(policy)?;
                axis_sum = axis_sum.add(&right_pow.scaled(C64::from(cm)))?.compress(policy)?;
            }
            total = Some(match total {
                None => axis_sum,
                Some(t) => t.add(&axis_sum)?.compress(policy)?,
            });
        }
        Ok(total.expect("at least one axis"))
    }

    /// Default eighth-order Laplacian compressed at ε = 1e-16.
    pub fn laplacian_default(grid: &QuanticsGrid) -> Result<Self> {
        Self::laplacian(grid, &StencilSpec::laplacian_default(), &operator_policy())
    }

    /// Diagonal operator `diag(f)` from a state `f`.
    pub fn hadamard_promote(f: &MpsState) -> Self {
        let tensors = f
            .tensors
            .iter()
            .map(|a| {
                let (l, _, r) = a.dim();
                Array4::from_shape_fn((l, 2, 2, r), |(wl, o, i, wr)| if o == i { a[[wl, o, wr]] } else { ZERO })
            })
            .collect();
        MpoOperator { tensors, grid: f.grid.clone() }
    }

    /// Linear-interpolation refinement operator on the grid with one more
    /// qubit along `axis`. Returns the operator (on the fine grid) and the
    /// chain position of the new qubit.
    pub fn prolongation(coarse: &QuanticsGrid, axis: usize) -> Result<(Self, usize)> {
        let (fine, pos) = coarse.refined(axis)?;
        let coarse_levels: Vec<usize> = (1..=coarse.bits()[axis])
            .map(|level| {
                fine.slots()
                    .iter()
                    .position(|s| s.axis == axis && s.level == level)
                    .expect("coarse level present")
            })
            .collect();
        let mut terms = vec![
            OperatorTerm { coefficient: ONE, factors: vec![(pos, PROJ0)] },
            OperatorTerm { coefficient: C64::from(0.5), factors: vec![(pos, PROJ1)] },
        ];
        for mut t in decrement_terms(&coarse_levels) {
            t.coefficient *= 0.5;
            t.factors.push((pos, RAISE));
            terms.push(t);
        }
        Ok((Self::from_terms(&fine, &terms, &operator_policy())?, pos))
    }

    pub fn grid(&self) -> &QuanticsGrid {
        &self.grid
    }

    pub fn tensors(&self) -> &[Array4<C64>] {
        &self.tensors
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t.dim().3).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_grid(&self, other: &QuanticsGrid) -> Result<()> {
        if self.grid.bits() != other.bits() || self.grid.slots() != other.slots() {
            return Err(QgpeError::GridMismatch("operator and operand use different grids".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.tensors[0].mapv_inplace(|z| z * factor);
        out
    }

    /// Exact sum; bond dimensions add.
    pub fn add(&self, other: &MpoOperator) -> Result<Self> {
        self.check_grid(&other.grid)?;
        let n = self.n_sites();
        if n == 1 {
            return Ok(MpoOperator { tensors: vec![&self.tensors[0] + &other.tensors[0]], grid: self.grid.clone() });
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .enumerate()
            .map(|(k, (a, b))| {
                let (la, _, _, ra) = a.dim();
                let (lb, _, _, rb) = b.dim();
                if k == 0 {
                    let mut t = Array4::zeros((1, 2, 2, ra + rb));
                    t.slice_mut(s![.., .., .., ..ra]).assign(a);
                    t.slice_mut(s![.., .., .., ra..]).assign(b);
                    t
                } else if k == n - 1 {
                    let mut t = Array4::zeros((la + lb, 2, 2, 1));
                    t.slice_mut(s![..la, .., .., ..]).assign(a);
                    t.slice_mut(s![la.., .., .., ..]).assign(b);
                    t
                } else {
                    let mut t = Array4::zeros((la + lb, 2, 2, ra + rb));
                    t.slice_mut(s![..la, .., .., ..ra]).assign(a);
                    t.slice_mut(s![la.., .., .., ra..]).assign(b);
                    t
                }
            })
            .collect();
        Ok(MpoOperator { tensors, grid: self.grid.clone() })
    }

    /// `self · other` (apply `other` first), compressed with `policy`.
    pub fn compose(&self, other: &MpoOperator, policy: &TruncationPolicy) -> Result<Self> {
        self.check_grid(&other.grid)?;
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| {
                let (la, _, _, ra) = a.dim();
                let (lb, _, _, rb) = b.dim();
                // a[wa, o, m, wa'] b[wb, m, i, wb'] -> [wa, o, wa', wb, i, wb']
                let c = tensordot(a.view().into_dyn(), &[2], b.view().into_dyn(), &[1]);
                let c = permute(c.view(), &[0, 3, 1, 4, 2, 5]);
                reshape(c, &[la * lb, 2, 2, ra * rb])
                    .into_dimensionality()
                    .expect("rank 4")
            })
            .collect();
        MpoOperator { tensors, grid: self.grid.clone() }.compress(policy)
    }

    /// SVD compression at the given policy.
    pub fn compress(&self, policy: &TruncationPolicy) -> Result<Self> {
        let mut fused: Vec<Array3<C64>> = self
            .tensors
            .iter()
            .map(|t| {
                let (l, _, _, r) = t.dim();
                t.as_standard_layout().into_owned().into_shape_with_order((l, 4, r)).expect("size")
            })
            .collect();
        chain::compress(&mut fused, policy)?;
        let tensors = fused
            .into_iter()
            .map(|t| {
                let (l, _, r) = t.dim();
                t.as_standard_layout().into_owned().into_shape_with_order((l, 2, 2, r)).expect("size")
            })
            .collect();
        Ok(MpoOperator { tensors, grid: self.grid.clone() })
    }

    /// Exact application; bond dimensions multiply.
    pub fn apply_exact(&self, x: &MpsState) -> Result<MpsState> {
        self.check_grid(&x.grid)?;
        let tensors = self
            .tensors
            .iter()
            .zip(&x.tensors)
            .map(|(w, a)| {
                let (wl, _, _, wr) = w.dim();
                let (al, _, ar) = a.dim();
                // w[wl, o, i, wr] a[al, i, ar] -> [wl, o, wr, al, ar]
                let c = tensordot(w.view().into_dyn(), &[2], a.view().into_dyn(), &[1]);
                let c = permute(c.view(), &[0, 3, 1, 2, 4]);
                reshape(c, &[wl * al, 2, wr * ar]).into_dimensionality().expect("rank 3")
            })
            .collect();
        Ok(MpsState { tensors, grid: x.grid.clone(), center: None })
    }

    /// Dense matrix in chain-index basis, rows = output.
    pub fn to_chain_matrix(&self, cap: u128) -> Result<Array2<C64>> {
        let dim = self.grid.total_points();
        let requested = dim.saturating_mul(dim);
        if requested > cap {
            return Err(QgpeError::SizeCap { requested, cap });
        }
        let mut acc = ndarray::ArrayD::<C64>::from_elem(ndarray::IxDyn(&[1, 1, 1]), ONE);
        for w in &self.tensors {
            let (o, i, _) = (acc.shape()[0], acc.shape()[1], acc.shape()[2]);
            let wr = w.dim().3;
            let c = tensordot(acc.view(), &[2], w.view().into_dyn(), &[0]); // [o, i, s, s', wr]
            let c = permute(c.view(), &[0, 2, 1, 3, 4]);
            acc = reshape(c, &[o * 2, i * 2, wr]);
        }
        let d = dim as usize;
        Ok(reshape(acc, &[d, d]).into_dimensionality().expect("rank 2"))
    }

    /// Dense matrix in row-major grid indexing (axis order x, y, z).
    pub fn to_dense(&self, cap: u128) -> Result<Array2<C64>> {
        let chain = self.to_chain_matrix(cap)?;
        let map = self.grid.chain_to_row_major_map();
        let mut out = Array2::zeros(chain.dim());
        for (ci, &ri) in map.iter().enumerate() {
            for (cj, &rj) in map.iter().enumerate() {
                out[[ri, rj]] = chain[[ci, cj]];
            }
        }
        Ok(out)
    }
}

fn coefficient(stencil: &StencilSpec, offset: i64) -> f64 {
    stencil
        .offsets
        .iter()
        .position(|&k| k == offset)
        .map(|i| stencil.coefficients[i])
        .unwrap_or(0.0)
}

/// Terms of the periodic increment (`Right`) or decrement (`Left`) acting on
/// the bits at `sites`, ordered coarse to fine, plus optional extra factors.
fn counter_terms(sites: &[usize], carry_bit: LocalOp, rest: LocalOp) -> Vec<OperatorTerm> {
    let mut terms = Vec::with_capacity(sites.len() + 1);
    for (l, &site) in sites.iter().enumerate() {
        let mut factors = vec![(site, carry_bit)];
        factors.extend(sites[l + 1..].iter().map(|&k| (k, rest)));
        terms.push(OperatorTerm { coefficient: ONE, factors });
    }
    terms.push(OperatorTerm { coefficient: ONE, factors: sites.iter().map(|&k| (k, rest)).collect() });
    terms
}

/// `m → m + 1 (mod 2^N)`: the lowest zero bit rises, the ones below it fall.
fn increment_terms(sites: &[usize]) -> Vec<OperatorTerm> {
    counter_terms(sites, RAISE, LOWER)
}

/// `m → m − 1 (mod 2^N)`.
fn decrement_terms(sites: &[usize]) -> Vec<OperatorTerm> {
    counter_terms(sites, LOWER, RAISE)
}

pub(crate) fn shift_terms(
    grid: &QuanticsGrid,
    axis: usize,
    direction: ShiftDirection,
    extra: &[(usize, LocalOp)],
) -> Result<Vec<OperatorTerm>> {
    if axis >= grid.dims() {
        return Err(QgpeError::Argument(format!("axis {axis} invalid for a {}D grid", grid.dims())));
    }
    let sites: Vec<usize> = (1..=grid.bits()[axis])
        .map(|level| {
            grid.slots()
                .iter()
                .position(|s| s.axis == axis && s.level == level)
                .expect("every level has a slot")
        })
        .collect();
    let mut terms = match direction {
        ShiftDirection::Right => increment_terms(&sites),
        ShiftDirection::Left => decrement_terms(&sites),
    };
    for t in &mut terms {
        t.factors.extend_from_slice(extra);
    }
    Ok(terms)
}

/// Refine `state` along `axis`: insert the new finest qubit as a copy of its
/// neighbouring bond, then interpolate linearly.
pub fn prolongate(state: &MpsState, axis: usize, policy: &TruncationPolicy) -> Result<MpsState> {
    let (op, pos) = MpoOperator::prolongation(&state.grid, axis)?;
    let bond = if pos == 0 { 1 } else { state.tensors[pos - 1].dim().2 };
    let copy = Array3::from_shape_fn((bond, 2, bond), |(l, _, r)| if l == r { ONE } else { ZERO });
    let mut tensors = state.tensors.clone();
    tensors.insert(pos, copy);
    let staged = MpsState { tensors, grid: op.grid.clone(), center: None };
    let refined = op.apply_exact(&staged)?;
    refined.compress(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScaleOrdering;
    use crate::mps::infidelity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CAP: u128 = 1 << 26;

    fn grid(d: usize, n: usize, ord: ScaleOrdering) -> QuanticsGrid {
        QuanticsGrid::new(d, n, 1.0, ord).unwrap()
    }

    fn one_hot(g: &QuanticsGrid, idx: usize) -> MpsState {
        let mut v = vec![ZERO; g.total_points() as usize];
        v[idx] = ONE;
        MpsState::encode_dense(g, &v, &TruncationPolicy::exact()).unwrap()
    }

    fn argmax(v: &[C64]) -> usize {
        (0..v.len()).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap()
    }

    fn random_dense(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    /// Dense cyclic shift of a row-major field along `axis` by `k` (positive = right).
    fn dense_shift(g: &QuanticsGrid, v: &[C64], axis: usize, k: i64) -> Vec<C64> {
        let shape = g.shape();
        let mut out = vec![ZERO; v.len()];
        for (r, val) in v.iter().enumerate() {
            let mut idx = vec![0; shape.len()];
            let mut rem = r;
            for a in (0..shape.len()).rev() {
                idx[a] = rem % shape[a];
                rem /= shape[a];
            }
            let m = shape[axis] as i64;
            idx[axis] = ((idx[axis] as i64 + k).rem_euclid(m)) as usize;
            out[g.row_major(&idx)] = *val;
        }
        out
    }

    #[test]
    fn one_hot_shifts_right() {
        let g = grid(1, 3, ScaleOrdering::sequential());
        let r = MpoOperator::shift(&g, 0, ShiftDirection::Right).unwrap();
        assert_eq!(r.max_bond(), 2);
        let out = r.apply_exact(&one_hot(&g, 2)).unwrap().decode_to_dense().unwrap();
        assert_eq!(argmax(&out), 3);
        let rr = r.compose(&r, &TruncationPolicy::default()).unwrap();
        assert_eq!(argmax(&rr.apply_exact(&one_hot(&g, 1)).unwrap().decode_to_dense().unwrap()), 3);
        let wrap = rr.apply_exact(&one_hot(&g, 7)).unwrap().decode_to_dense().unwrap();
        assert_eq!(argmax(&wrap), 1);
    }

    #[test]
    fn shifts_match_dense_cyclic_shift_in_every_ordering() {
        for ord in [ScaleOrdering::sequential(), ScaleOrdering::interleaved(), ScaleOrdering::stair()] {
            let g = grid(2, 3, ord);
            let v = random_dense(64, 5);
            let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::exact()).unwrap();
            for axis in 0..2 {
                for (dir, k) in [(ShiftDirection::Right, 1), (ShiftDirection::Left, -1)] {
                    let op = MpoOperator::shift(&g, axis, dir).unwrap();
                    let out = op.apply_exact(&s).unwrap().decode_to_dense().unwrap();
                    let expected = dense_shift(&g, &v, axis, k);
                    let err = out.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    assert!(err < 1e-12);
                }
            }
        }
    }

    #[test]
    fn left_undoes_right_and_full_wrap_is_identity() {
        let g = grid(1, 4, ScaleOrdering::sequential());
        let p = TruncationPolicy::default();
        let l = MpoOperator::shift(&g, 0, ShiftDirection::Left).unwrap();
        let r = MpoOperator::shift(&g, 0, ShiftDirection::Right).unwrap();
        let x = MpsState::random(g.clone(), 4, 3);
        let back = l.compose(&r, &p).unwrap().apply_exact(&x).unwrap();
        assert!(infidelity(&back, &x).unwrap() < 1e-12);
        let mut pow = MpoOperator::identity(&g);
        for _ in 0..16 {
            pow = r.compose(&pow, &p).unwrap();
        }
        let id = pow.to_dense(CAP).unwrap();
        assert!((&id - &Array2::<C64>::eye(16)).iter().all(|z| z.norm() < 1e-12));
        let shifted = r.apply_exact(&x).unwrap();
        assert!((shifted.norm() - x.norm()).abs() < 1e-12 * x.norm());
    }

    #[test]
    fn ordering_does_not_change_dense_operator() {
        let st = StencilSpec::laplacian_default();
        let p = TruncationPolicy::default();
        let dense: Vec<Array2<C64>> = [ScaleOrdering::sequential(), ScaleOrdering::interleaved(), ScaleOrdering::stair()]
            .into_iter()
            .map(|o| MpoOperator::laplacian(&grid(2, 4, o), &st, &p).unwrap().to_dense(CAP).unwrap())
            .collect();
        let scale = dense[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        for d in &dense[1..] {
            assert!((d - &dense[0]).iter().all(|z| z.norm() < 1e-10 * scale));
        }
    }

    #[test]
    fn laplacian_of_sine_and_constant() {
        let g = QuanticsGrid::new(1, 10, 2.0, ScaleOrdering::sequential()).unwrap();
        let lap = MpoOperator::laplacian_default(&g).unwrap();
        assert_eq!(lap.max_bond(), 3);
        let k = 2.0 * std::f64::consts::PI / 2.0;
        let f = MpsState::encode_function(&g, |x| C64::from((k * x[0]).sin()), &TruncationPolicy::default()).unwrap();
        let out = lap.apply_exact(&f).unwrap().decode_to_dense().unwrap();
        let expected = f.decode_to_dense().unwrap();
        let num: f64 = out.iter().zip(&expected).map(|(a, b)| (a + b * (k * k)).norm_sqr()).sum();
        let den: f64 = expected.iter().map(|b| (b * (k * k)).norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-9);
        // Unit spacing keeps the stencil sum free of 1/h² roundoff amplification.
        let unit = QuanticsGrid::new(1, 10, 1024.0, ScaleOrdering::sequential()).unwrap();
        let c = MpsState::ones(unit.clone());
        let residual = MpoOperator::laplacian_default(&unit).unwrap().apply_exact(&c).unwrap();
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn laplacian_is_symmetric_negative_semidefinite() {
        let g = grid(2, 4, ScaleOrdering::stair());
        let m = MpoOperator::laplacian_default(&g).unwrap().to_dense(CAP).unwrap();
        let mh = m.t().mapv(|z| z.conj());
        assert!((&m - &mh).iter().all(|z| z.norm() < 1e-9));
        let v: Vec<f64> = random_dense(256, 1).iter().map(|z| z.re).collect();
        let va = ndarray::Array1::from(v.iter().map(|&x| C64::from(x)).collect::<Vec<_>>());
        let q: C64 = va.dot(&m.dot(&va));
        assert!(q.re <= 0.0);
    }

    #[test]
    fn stencil_wider_than_grid_is_rejected() {
        let g = grid(1, 3, ScaleOrdering::sequential());
        assert!(MpoOperator::laplacian_default(&g).is_err());
        assert!(MpoOperator::shift(&g, 1, ShiftDirection::Left).is_err());
    }

    #[test]
    fn hadamard_product_matches_pointwise() {
        let g = grid(2, 4, ScaleOrdering::stair());
        let a = random_dense(256, 2);
        let b = random_dense(256, 3);
        let sa = MpsState::encode_dense(&g, &a, &TruncationPolicy::exact()).unwrap();
        let sb = MpsState::encode_dense(&g, &b, &TruncationPolicy::exact()).unwrap();
        let prod = MpoOperator::hadamard_promote(&sa).apply_exact(&sb).unwrap().decode_to_dense().unwrap();
        for i in 0..256 {
            assert!((prod[i] - a[i] * b[i]).norm() < 1e-12);
        }
        let id = MpoOperator::hadamard_promote(&MpsState::ones(g.clone()));
        assert!(infidelity(&id.apply_exact(&sb).unwrap(), &sb).unwrap() < 1e-14);
    }

    #[test]
    fn prolongation_is_linear_interpolation() {
        for (d, ord) in [(1, ScaleOrdering::sequential()), (2, ScaleOrdering::stair()), (3, ScaleOrdering::stair()), (2, ScaleOrdering::interleaved())] {
            let g = QuanticsGrid::new(d, 2, 4.0, ord).unwrap();
            let v = random_dense(g.total_points() as usize, 9);
            let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::exact()).unwrap();
            for axis in 0..d {
                let fine = prolongate(&s, axis, &TruncationPolicy::exact()).unwrap();
                let out = fine.decode_to_dense().unwrap();
                // Dense oracle: even points copy, odd points average neighbours.
                let shape = g.shape();
                let fshape = fine.grid().shape();
                for (r, val) in out.iter().enumerate() {
                    let mut idx = vec![0; d];
                    let mut rem = r;
                    for a in (0..d).rev() {
                        idx[a] = rem % fshape[a];
                        rem /= fshape[a];
                    }
                    let mut lo = idx.clone();
                    lo[axis] /= 2;
                    let expected = if idx[axis] % 2 == 0 {
                        v[g.row_major(&lo)]
                    } else {
                        let mut hi = lo.clone();
                        hi[axis] = (hi[axis] + 1) % shape[axis];
                        0.5 * (v[g.row_major(&lo)] + v[g.row_major(&hi)])
                    };
                    assert!((val - expected).norm() < 1e-12, "d={d} axis={axis}");
                }
            }
        }
    }

    #[test]
    fn prolongation_operator_has_bond_two_in_1d() {
        let g = grid(1, 6, ScaleOrdering::sequential());
        let (p, pos) = MpoOperator::prolongation(&g, 0).unwrap();
        assert_eq!(pos, 6);
        assert_eq!(p.max_bond(), 2);
    }

    #[test]
    fn ramp_stays_a_ramp() {
        let g = QuanticsGrid::new(1, 4, 16.0, ScaleOrdering::sequential()).unwrap();
        // Periodic wrap only touches the last interval; compare the interior.
        let s = MpsState::encode_function(&g, |x| C64::from(x[0]), &TruncationPolicy::default()).unwrap();
        let fine = prolongate(&s, 0, &TruncationPolicy::default()).unwrap().decode_to_dense().unwrap();
        for (i, v) in fine.iter().enumerate().take(31) {
            assert!((v.re - 0.5 * i as f64).abs() < 1e-12);
        }
        let c = prolongate(&MpsState::ones(g), 0, &TruncationPolicy::default()).unwrap();
        assert!(c.decode_to_dense().unwrap().iter().all(|z| (z - ONE).norm() < 1e-12));
    }
}
