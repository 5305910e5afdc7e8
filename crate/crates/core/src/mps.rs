//! Quantics matrix product states.
//!
//! Site `k` of the chain carries the qubit `grid.slots()[k]`. A chain index
//! is the bit string `n_0 n_1 … n_{K-1}` read with site 0 as the most
//! significant bit; [`QuanticsGrid::chain_to_row_major_map`] converts it to a
//! grid position.
//!
//! ```text
//!   χ_0=1   χ_1     χ_2           χ_K=1
//!    ── A0 ──── A1 ──── … ── A_{K-1} ──
//!       │       │             │
//!      n_0     n_1          n_{K-1}
//! ```

use ndarray::{s, Array1, Array2, Array3};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain;
use crate::error::{QgpeError, Result};
use crate::grid::QuanticsGrid;
use crate::linalg::svd_truncated;
use crate::truncation::TruncationPolicy;

/// Default cap on the number of elements a state may be densified into.
pub const DEFAULT_DENSE_CAP: u128 = 1 << 26;

#[derive(Clone, Debug)]
pub struct MpsState {
    pub(crate) tensors: Vec<Array3<C64>>,
    pub(crate) grid: QuanticsGrid,
    pub(crate) center: Option<usize>,
}

/// Per-bond squared normalized singular values, descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtData {
    /// `bonds[l]` belongs to the cut between sites `l` and `l+1`.
    pub bonds: Vec<Vec<f64>>,
}

impl SchmidtData {
    /// Von Neumann entropy (natural log) of each cut.
    pub fn entropies(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| entropy(b)).collect()
    }
}

fn entropy(weights: &[f64]) -> f64 {
    weights.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.ln()).sum()
}

fn check_cap(requested: u128, cap: u128) -> Result<()> {
    if requested > cap {
        Err(QgpeError::SizeCap { requested, cap })
    } else {
        Ok(())
    }
}

impl MpsState {
    /// Build from explicit tensors `(χ_left, 2, χ_right)`.
    pub fn from_tensors(grid: QuanticsGrid, tensors: Vec<Array3<C64>>) -> Result<Self> {
        if tensors.len() != grid.n_sites() {
            return Err(QgpeError::Argument(format!(
                "grid has {} sites, got {} tensors",
                grid.n_sites(),
                tensors.len()
            )));
        }
        let mut right = 1;
        for (i, t) in tensors.iter().enumerate() {
            let (l, d, r) = t.dim();
            if l != right || d != 2 || l == 0 || r == 0 {
                return Err(QgpeError::Argument(format!("tensor {i} has incompatible shape {:?}", t.dim())));
            }
            right = r;
        }
        if right != 1 {
            return Err(QgpeError::Argument("last tensor must have right bond 1".into()));
        }
        Ok(MpsState { tensors, grid, center: None })
    }

    /// Product state with local vectors `local(site)`.
    pub fn product<F: Fn(usize) -> [C64; 2]>(grid: QuanticsGrid, local: F) -> Self {
        let tensors = (0..grid.n_sites())
            .map(|k| {
                let v = local(k);
                Array3::from_shape_fn((1, 2, 1), |(_, s, _)| v[s])
            })
            .collect();
        MpsState { tensors, grid, center: None }
    }

    /// The all-ones function.
    pub fn ones(grid: QuanticsGrid) -> Self {
        Self::product(grid, |_| [C64::new(1.0, 0.0); 2])
    }

    /// Constant function `value`.
    pub fn constant(grid: QuanticsGrid, value: C64) -> Self {
        let mut s = Self::ones(grid);
        s.tensors[0].mapv_inplace(|z| z * value);
        s
    }

    /// Random tensors with entries uniform in `[-1,1] + i[-1,1]` and bonds
    /// `min(chi, 2^l, 2^(K-l))`.
    pub fn random(grid: QuanticsGrid, chi: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n_sites();
        let bond = |l: usize| -> usize {
            let cap = |e: usize| if e >= 63 { usize::MAX } else { 1usize << e };
            chi.max(1).min(cap(l)).min(cap(n - l))
        };
        let tensors = (0..n)
            .map(|k| {
                Array3::from_shape_fn((bond(k), 2, bond(k + 1)), |_| {
                    C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
                })
            })
            .collect();
        MpsState { tensors, grid, center: None }
    }

    /// Sample `sampler` at every grid point and compress with iterative SVDs.
    pub fn encode_function<F>(grid: &QuanticsGrid, sampler: F, policy: &TruncationPolicy) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64,
    {
        Self::encode_function_with_cap(grid, sampler, policy, DEFAULT_DENSE_CAP)
    }

    pub fn encode_function_with_cap<F>(grid: &QuanticsGrid, sampler: F, policy: &TruncationPolicy, cap: u128) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64,
    {
        check_cap(grid.total_points(), cap)?;
        let points = grid.total_points() as usize;
        let chain: Vec<C64> = (0..points).map(|c| sampler(&grid.coordinates(&grid.chain_to_axes(c)))).collect();
        Self::from_chain_vector(grid.clone(), chain, policy)
    }

    /// Compress a dense row-major field (axis order x, y, z).
    pub fn encode_dense(grid: &QuanticsGrid, values: &[C64], policy: &TruncationPolicy) -> Result<Self> {
        Self::encode_dense_with_cap(grid, values, policy, DEFAULT_DENSE_CAP)
    }

    pub fn encode_dense_with_cap(grid: &QuanticsGrid, values: &[C64], policy: &TruncationPolicy, cap: u128) -> Result<Self> {
        check_cap(grid.total_points(), cap)?;
        if values.len() as u128 != grid.total_points() {
            return Err(QgpeError::GridMismatch(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.total_points()
            )));
        }
        let map = grid.chain_to_row_major_map();
        let chain: Vec<C64> = map.iter().map(|&r| values[r]).collect();
        Self::from_chain_vector(grid.clone(), chain, policy)
    }

    /// Iterative SVD of a vector indexed in chain order.
    pub fn from_chain_vector(grid: QuanticsGrid, chain: Vec<C64>, policy: &TruncationPolicy) -> Result<Self> {
        let n = grid.n_sites();
        if chain.len() as u128 != grid.total_points() {
            return Err(QgpeError::GridMismatch("chain vector length does not match grid".into()));
        }
        let mut tensors = Vec::with_capacity(n);
        let mut rest = Array2::from_shape_vec((1, chain.len()), chain)?;
        let mut bond = 1;
        for _ in 0..n - 1 {
            let cols = rest.ncols() / 2;
            let m = rest.as_standard_layout().into_owned().into_shape_with_order((bond * 2, cols))?;
            let svd = svd_truncated(&m, policy)?;
            let keep = svd.s.len();
            tensors.push(chain::from_left_matrix(svd.u, bond, 2));
            let mut sv = svd.vt;
            for (mut row, &s) in sv.rows_mut().into_iter().zip(&svd.s) {
                row.mapv_inplace(|z| z * s);
            }
            rest = sv;
            bond = keep;
        }
        tensors.push(rest.as_standard_layout().into_owned().into_shape_with_order((bond, 2, 1))?);
        Ok(MpsState { tensors, grid, center: Some(n - 1) })
    }

    pub fn grid(&self) -> &QuanticsGrid {
        &self.grid
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Orthogonality centre, if the state is known to be in mixed canonical form.
    pub fn canonical_center(&self) -> Option<usize> {
        self.center
    }

    /// Internal bond dimensions `χ_1 … χ_{K-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Number of complex parameters, `Σ 2 χ_left χ_right`.
    pub fn parameter_count(&self) -> u128 {
        self.tensors.iter().map(|t| t.len() as u128).sum()
    }

    /// Parameters relative to the dense grid size.
    pub fn memory_ratio(&self) -> f64 {
        self.parameter_count() as f64 / 2f64.powi(self.n_sites() as i32)
    }

    /// Amplitude at a chain index.
    pub fn amplitude(&self, chain_index: usize) -> C64 {
        let n = self.n_sites();
        let mut v = Array1::from_elem(1, C64::new(1.0, 0.0));
        for (k, t) in self.tensors.iter().enumerate() {
            let bit = (chain_index >> (n - 1 - k)) & 1;
            v = v.dot(&t.slice(s![.., bit, ..]));
        }
        v[0]
    }

    /// Contract to a vector in chain order.
    pub fn to_chain_vector(&self, cap: u128) -> Result<Vec<C64>> {
        check_cap(self.grid.total_points(), cap)?;
        let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for t in &self.tensors {
            let rows = acc.nrows();
            let next = acc.dot(&chain::as_right_matrix(t));
            acc = next.into_shape_with_order((rows * 2, t.dim().2))?;
        }
        Ok(acc.into_raw_vec_and_offset().0)
    }

    /// Contract to a row-major field (axis order x, y, z), default cap.
    pub fn decode_to_dense(&self) -> Result<Vec<C64>> {
        self.to_dense(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense(&self, cap: u128) -> Result<Vec<C64>> {
        let chain = self.to_chain_vector(cap)?;
        let map = self.grid.chain_to_row_major_map();
        let mut out = vec![C64::new(0.0, 0.0); chain.len()];
        for (c, &r) in map.iter().enumerate() {
            out[r] = chain[c];
        }
        Ok(out)
    }

    /// Mixed canonical form with centre `center`.
    pub fn canonicalize(&self, center: usize) -> Result<Self> {
        let mut out = self.clone();
        out.canonicalize_in_place(center)?;
        Ok(out)
    }

    pub(crate) fn canonicalize_in_place(&mut self, center: usize) -> Result<()> {
        if center >= self.n_sites() {
            return Err(QgpeError::Argument(format!("centre {center} outside chain")));
        }
        match self.center {
            Some(c) if c == center => {}
            Some(c) if c < center => chain::left_sweep(&mut self.tensors, c, center)?,
            Some(c) => chain::right_sweep(&mut self.tensors, c, center)?,
            None => chain::canonicalize(&mut self.tensors, center)?,
        }
        self.center = Some(center);
        Ok(())
    }

    /// Truncate according to `policy`, keeping the norm of the input.
    pub fn truncate(&self, policy: &TruncationPolicy) -> Result<Self> {
        Ok(self.truncate_with_weight(policy)?.0)
    }

    /// Like [`MpsState::truncate`], also returning the summed discarded weight.
    pub fn truncate_with_weight(&self, policy: &TruncationPolicy) -> Result<(Self, f64)> {
        let mut out = self.clone();
        let n = out.n_sites();
        out.canonicalize_in_place(n - 1)?;
        let before = chain::norm_sqr(&out.tensors[n - 1]).sqrt();
        let discarded = chain::truncate_from_right(&mut out.tensors, policy)?;
        out.center = Some(0);
        let after = chain::norm_sqr(&out.tensors[0]).sqrt();
        if after > 0.0 {
            out.tensors[0].mapv_inplace(|z| z * (before / after));
        }
        Ok((out, discarded))
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &MpsState) -> Result<C64> {
        self.check_same_grid(other)?;
        Ok(chain::overlap(&self.tensors, &other.tensors))
    }

    /// Squared norm, read off the orthogonality centre (canonicalizing a copy
    /// when needed, which avoids cancellation in the transfer-matrix sum).
    pub fn norm_sqr(&self) -> f64 {
        match self.center {
            Some(c) => chain::norm_sqr(&self.tensors[c]),
            None => {
                let mut work = self.tensors.clone();
                let last = work.len() - 1;
                match chain::left_sweep(&mut work, 0, last) {
                    Ok(()) => chain::norm_sqr(&work[last]),
                    Err(_) => chain::overlap(&self.tensors, &self.tensors).re.max(0.0),
                }
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Multiply by a scalar.
    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        let site = out.center.unwrap_or(0);
        out.tensors[site].mapv_inplace(|z| z * factor);
        out
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.tensors {
            t.mapv_inplace(|z| z.conj());
        }
        out
    }

    /// Exact sum; bond dimensions add.
    pub fn add(&self, other: &MpsState) -> Result<Self> {
        self.check_same_grid(other)?;
        let n = self.n_sites();
        if n == 1 {
            return Ok(MpsState {
                tensors: vec![&self.tensors[0] + &other.tensors[0]],
                grid: self.grid.clone(),
                center: None,
            });
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .enumerate()
            .map(|(k, (a, b))| {
                let (la, _, ra) = a.dim();
                let (lb, _, rb) = b.dim();
                if k == 0 {
                    let mut t = Array3::zeros((1, 2, ra + rb));
                    t.slice_mut(s![.., .., ..ra]).assign(a);
                    t.slice_mut(s![.., .., ra..]).assign(b);
                    t
                } else if k == n - 1 {
                    let mut t = Array3::zeros((la + lb, 2, 1));
                    t.slice_mut(s![..la, .., ..]).assign(a);
                    t.slice_mut(s![la.., .., ..]).assign(b);
                    t
                } else {
                    let mut t = Array3::zeros((la + lb, 2, ra + rb));
                    t.slice_mut(s![..la, .., ..ra]).assign(a);
                    t.slice_mut(s![la.., .., ra..]).assign(b);
                    t
                }
            })
            .collect();
        Ok(MpsState { tensors, grid: self.grid.clone(), center: None })
    }

    /// `Σ_j c_j |s_j⟩` compressed with `policy`.
    pub fn linear_combination(terms: &[(C64, &MpsState)], policy: &TruncationPolicy) -> Result<Self> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| QgpeError::Argument("empty linear combination".into()))?;
        let mut acc = first.1.scaled(first.0);
        for (c, s) in rest {
            acc = acc.add(&s.scaled(*c))?.compress(policy)?;
        }
        if rest.is_empty() {
            acc = acc.compress(policy)?;
        }
        Ok(acc)
    }

    /// Canonicalize and truncate without restoring the norm.
    pub fn compress(&self, policy: &TruncationPolicy) -> Result<Self> {
        let mut out = self.clone();
        chain::compress(&mut out.tensors, policy)?;
        out.center = Some(0);
        Ok(out)
    }

    /// Normalized squared singular values at every bond.
    pub fn schmidt_spectrum(&self) -> Result<SchmidtData> {
        let mut work = self.clone();
        let n = work.n_sites();
        work.canonicalize_in_place(n - 1)?;
        let mut bonds = vec![Vec::new(); n - 1];
        for i in (1..n).rev() {
            let (_, d, r) = work.tensors[i].dim();
            let svd = svd_truncated(&chain::as_right_matrix(&work.tensors[i]), &TruncationPolicy::exact())?;
            let total: f64 = svd.spectrum.iter().map(|s| s * s).sum();
            if total <= 0.0 {
                return Err(QgpeError::Domain("Schmidt spectrum of a zero state".into()));
            }
            bonds[i - 1] = svd.spectrum.iter().map(|s| s * s / total).collect();
            let mut us = svd.u;
            for (mut col, &s) in us.columns_mut().into_iter().zip(&svd.s) {
                col.mapv_inplace(|z| z * s);
            }
            work.tensors[i] = chain::from_right_matrix(svd.vt, d, r);
            work.tensors[i - 1] = chain::absorb_right(&work.tensors[i - 1], &us);
        }
        Ok(SchmidtData { bonds })
    }

    /// Two-site mutual information `S_l + S_m − S_{lm}` (natural log).
    pub fn mutual_information(&self, l: usize, m: usize) -> Result<f64> {
        let n = self.n_sites();
        if l == m || l >= n || m >= n {
            return Err(QgpeError::Argument(format!("mutual information needs two distinct sites, got {l} and {m}")));
        }
        let (a, b) = if l < m { (l, m) } else { (m, l) };
        let work = self.canonicalize(a)?;
        // x[s, s', b, b'] after the first open site.
        let t = &work.tensors[a];
        let (la, _, ra) = t.dim();
        let mut x = ndarray::Array4::<C64>::zeros((2, 2, ra, ra));
        for s in 0..2 {
            for sp in 0..2 {
                for al in 0..la {
                    for b1 in 0..ra {
                        let v = t[[al, s, b1]];
                        if v == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for b2 in 0..ra {
                            x[[s, sp, b1, b2]] += v * t[[al, sp, b2]].conj();
                        }
                    }
                }
            }
        }
        for t in &work.tensors[a + 1..b] {
            let (lt, _, rt) = t.dim();
            let mut next = ndarray::Array4::<C64>::zeros((2, 2, rt, rt));
            for s in 0..2 {
                for sp in 0..2 {
                    let xm: Array2<C64> = x.slice(s![s, sp, .., ..]).to_owned();
                    let mut acc = Array2::<C64>::zeros((rt, rt));
                    for p in 0..2 {
                        let tp: Array2<C64> = t.slice(s![.., p, ..]).to_owned(); // (lt, rt)
                        let left: Array2<C64> = tp.t().dot(&xm);
                        acc = acc + left.dot(&tp.mapv(|z| z.conj()));
                    }
                    next.slice_mut(s![s, sp, .., ..]).assign(&acc);
                }
            }
            debug_assert_eq!(lt, x.dim().2);
            x = next;
        }
        let t = &work.tensors[b];
        let mut rho = Array2::<C64>::zeros((4, 4));
        for s in 0..2 {
            for sp in 0..2 {
                let xm: Array2<C64> = x.slice(s![s, sp, .., ..]).to_owned();
                for q in 0..2 {
                    for qp in 0..2 {
                        let tq: Array2<C64> = t.slice(s![.., q, ..]).to_owned();
                        let tqp: Array2<C64> = t.slice(s![.., qp, ..]).mapv(|z| z.conj());
                        // Σ_{b,b',c} x[b,b'] t[b,q,c] conj(t[b',q',c])
                        let left: Array2<C64> = tq.t().dot(&xm);
                        let v: C64 = left.dot(&tqp).diag().sum();
                        rho[[2 * s + q, 2 * sp + qp]] = v;
                    }
                }
            }
        }
        let trace: C64 = rho.diag().sum();
        if trace.re <= 0.0 {
            return Err(QgpeError::Domain("mutual information of a zero state".into()));
        }
        rho.mapv_inplace(|z| z / trace.re);
        let mut rho_a = Array2::<C64>::zeros((2, 2));
        let mut rho_b = Array2::<C64>::zeros((2, 2));
        for s in 0..2 {
            for sp in 0..2 {
                for q in 0..2 {
                    rho_a[[s, sp]] += rho[[2 * s + q, 2 * sp + q]];
                    rho_b[[s, sp]] += rho[[2 * q + s, 2 * q + sp]];
                }
            }
        }
        let ent = |r: &Array2<C64>| -> Result<f64> {
            let (vals, _) = r.eigh(UPLO::Lower)?;
            Ok(entropy(&vals.iter().map(|&v| v.max(0.0)).collect::<Vec<_>>()))
        };
        Ok((ent(&rho_a)? + ent(&rho_b)? - ent(&rho)?).max(0.0))
    }

    /// Mutual information for every pair of sites (symmetric, zero diagonal).
    pub fn mutual_information_matrix(&self) -> Result<Array2<f64>> {
        let n = self.n_sites();
        let mut out = Array2::zeros((n, n));
        for l in 0..n {
            for m in l + 1..n {
                let v = self.mutual_information(l, m)?;
                out[[l, m]] = v;
                out[[m, l]] = v;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_same_grid(&self, other: &MpsState) -> Result<()> {
        if self.grid.bits() != other.grid.bits() || self.grid.slots() != other.grid.slots() {
            return Err(QgpeError::GridMismatch("states live on different grids or orderings".into()));
        }
        Ok(())
    }

    /// Same state on a grid with identical slot layout (e.g. a relabelled box length).
    pub fn with_grid(&self, grid: QuanticsGrid) -> Result<Self> {
        if grid.slots() != self.grid.slots() {
            return Err(QgpeError::GridMismatch("slot layouts differ".into()));
        }
        let mut out = self.clone();
        out.grid = grid;
        Ok(out)
    }
}

/// Infidelity `1 − |⟨a|b⟩| / (‖a‖ ‖b‖)` between two states.
pub fn infidelity(a: &MpsState, b: &MpsState) -> Result<f64> {
    // Norm and overlap are contracted differently, so identical inputs would
    // otherwise report rounding noise.
    if a.grid == b.grid && a.tensors == b.tensors {
        return if a.norm_sqr() > 0.0 { Ok(0.0) } else { Err(QgpeError::Domain("infidelity of a zero-norm state".into())) };
    }
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let ov = a.overlap(b)?;
    infidelity_from_parts(ov, na, nb)
}

/// Infidelity between two dense vectors of equal length.
pub fn dense_infidelity(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(QgpeError::GridMismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    infidelity_from_parts(ov, na, nb)
}

fn infidelity_from_parts(overlap: C64, na: f64, nb: f64) -> Result<f64> {
    if na <= 0.0 || nb <= 0.0 {
        return Err(QgpeError::Domain("infidelity of a zero-norm state".into()));
    }
    Ok((1.0 - overlap.norm() / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScaleOrdering;

    fn grid1(n: usize) -> QuanticsGrid {
        QuanticsGrid::new(1, n, 1.0, ScaleOrdering::sequential()).unwrap()
    }

    fn random_vector(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn max_err(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// Reference bipartite spectrum computed by reshaping the dense chain vector.
    fn dense_cut_weights(v: &[C64], left_sites: usize, n: usize) -> Vec<f64> {
        let m = Array2::from_shape_vec((1 << left_sites, 1 << (n - left_sites)), v.to_vec()).unwrap();
        let svd = svd_truncated(&m, &TruncationPolicy::exact()).unwrap();
        let total: f64 = svd.spectrum.iter().map(|s| s * s).sum();
        svd.spectrum.iter().map(|s| s * s / total).collect()
    }

    #[test]
    fn constant_is_product_state() {
        let g = grid1(6);
        let s = MpsState::encode_function(&g, |_| C64::new(1.0, 0.0), &TruncationPolicy::default()).unwrap();
        assert!(s.bond_dims().iter().all(|&b| b == 1));
        assert!(s.decode_to_dense().unwrap().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
        let ones = MpsState::ones(g).decode_to_dense().unwrap();
        assert!(ones.iter().all(|z| *z == C64::new(1.0, 0.0)));
    }

    #[test]
    fn complex_plane_wave_is_product_sine_is_rank_two() {
        let g = QuanticsGrid::new(1, 8, 3.0, ScaleOrdering::sequential()).unwrap();
        let s = MpsState::encode_function(&g, |x| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x[0] / 3.0), &TruncationPolicy::default())
            .unwrap();
        // Independent check: every cut of the dense vector has a single nonzero
        // weight, since exp(2πi Σ n_l 2^-l) factorizes over the bits.
        let v = s.to_chain_vector(1 << 20).unwrap();
        for cut in 1..8 {
            let w = dense_cut_weights(&v, cut, 8);
            assert_eq!(w.iter().filter(|&&x| x > 1e-20).count(), 1);
        }
        assert_eq!(s.max_bond(), 1);
        let real = MpsState::encode_function(&g, |x| C64::from((2.0 * std::f64::consts::PI * x[0] / 3.0).sin()), &TruncationPolicy::default())
            .unwrap();
        assert_eq!(real.max_bond(), 2);
    }

    #[test]
    fn random_round_trip() {
        let g = grid1(10);
        let v = random_vector(1024, 4);
        let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::default()).unwrap();
        assert!(max_err(&s.decode_to_dense().unwrap(), &v) < 1e-12);
        for (l, &b) in s.bond_dims().iter().enumerate() {
            assert!(b <= (1 << (l + 1)).min(1 << (10 - l - 1)));
        }
    }

    #[test]
    fn truncation_error_is_discarded_weight() {
        let g = grid1(8);
        let v = random_vector(256, 8);
        let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::exact()).unwrap();
        // Only the middle bond gets cut when the cap is 8 on an 8-qubit chain
        // whose natural middle rank is 16; the other bonds are already ≤ 8.
        let (t, w) = s.truncate_with_weight(&TruncationPolicy::with_chi_max(8).unwrap()).unwrap();
        let chain = s.to_chain_vector(1 << 20).unwrap();
        let dense = dense_cut_weights(&chain, 4, 8);
        let expected: f64 = dense[8..].iter().sum();
        assert!((w - expected).abs() < 1e-12, "{w} vs {expected}");
        // Truncated state (renormalized to the input norm) vs. best rank-8 approximation.
        let approx = t.to_chain_vector(1 << 20).unwrap();
        let norm_sqr: f64 = chain.iter().map(|z| z.norm_sqr()).sum();
        let scale = (1.0 - expected).sqrt();
        let err: f64 = approx.iter().zip(&chain).map(|(a, b)| (a * scale - b).norm_sqr()).sum::<f64>() / norm_sqr;
        assert!((err - expected).abs() < 1e-10, "{err} vs {expected}");
    }

    #[test]
    fn loose_policy_keeps_state() {
        let g = grid1(6);
        let s = MpsState::random(g, 4, 1);
        let t = s.truncate(&TruncationPolicy::with_chi_max(16).unwrap()).unwrap();
        assert!(infidelity(&s, &t).unwrap() < 1e-14);
        assert!((s.norm() - t.norm()).abs() < 1e-10 * s.norm());
    }

    #[test]
    fn rank_one_truncation_matches_dominant_overlap() {
        let g = grid1(2);
        let v = random_vector(4, 3);
        let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::exact()).unwrap();
        let t = s.truncate(&TruncationPolicy::with_chi_max(1).unwrap()).unwrap();
        let w = dense_cut_weights(&s.to_chain_vector(16).unwrap(), 1, 2);
        let expected = 1.0 - w[0].sqrt();
        assert!((infidelity(&s, &t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn canonical_forms_are_isometric() {
        let g = grid1(7);
        let s = MpsState::random(g, 6, 2).canonicalize(3).unwrap();
        for (k, t) in s.tensors().iter().enumerate() {
            if k < 3 {
                let m = chain::as_left_matrix(t);
                let id = m.t().mapv(|z| z.conj()).dot(&m);
                assert!(max_err(id.as_slice().unwrap(), Array2::eye(id.nrows()).as_slice().unwrap()) < 1e-12);
            } else if k > 3 {
                let m = chain::as_right_matrix(t);
                let id = m.dot(&m.t().mapv(|z| z.conj()));
                assert!(max_err(id.as_slice().unwrap(), Array2::eye(id.nrows()).as_slice().unwrap()) < 1e-12);
            }
        }
    }

    #[test]
    fn memory_ratio_counts_each_tensor_once() {
        let s = MpsState::ones(grid1(3));
        assert_eq!(s.memory_ratio(), 0.75);
        let full = MpsState::encode_dense(&grid1(4), &random_vector(16, 1), &TruncationPolicy::exact()).unwrap();
        assert_eq!(full.bond_dims(), vec![2, 4, 2]);
        assert_eq!(full.memory_ratio(), 2.5);
    }

    #[test]
    fn infidelity_basics() {
        let g = grid1(5);
        let a = MpsState::random(g.clone(), 3, 5);
        assert!(infidelity(&a, &a).unwrap() < 1e-14);
        assert!(infidelity(&a, &a.scaled(C64::new(-2.0, 0.5))).unwrap() < 1e-14);
        let e0 = MpsState::product(g.clone(), |_| [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let e1 = MpsState::product(g.clone(), |_| [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!((infidelity(&e0, &e1).unwrap() - 1.0).abs() < 1e-15);
        let zero = MpsState::constant(g, C64::new(0.0, 0.0));
        assert!(infidelity(&zero, &a).is_err());
    }

    #[test]
    fn schmidt_spectrum_matches_dense_cuts() {
        let g = grid1(10);
        let v = random_vector(1024, 21);
        let s = MpsState::encode_dense(&g, &v, &TruncationPolicy::exact()).unwrap();
        let spec = s.schmidt_spectrum().unwrap();
        let chain = s.to_chain_vector(1 << 20).unwrap();
        for cut in 1..10 {
            let dense = dense_cut_weights(&chain, cut, 10);
            let ours = &spec.bonds[cut - 1];
            assert!((ours.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in ours.iter().zip(&dense) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_of_cat_state() {
        let g = grid1(4);
        let a = MpsState::product(g.clone(), |_| [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let b = MpsState::product(g, |_| [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let cat = a.add(&b).unwrap();
        let spec = cat.schmidt_spectrum().unwrap();
        assert!((spec.bonds[1][0] - 0.5).abs() < 1e-14 && (spec.bonds[1][1] - 0.5).abs() < 1e-14);
        let product = MpsState::random(grid1(4), 1, 3).schmidt_spectrum().unwrap();
        assert!(product.bonds.iter().all(|b| b.len() == 1 && (b[0] - 1.0).abs() < 1e-14));
    }

    #[test]
    fn mutual_information_cases() {
        let g = grid1(2);
        let bell = MpsState::encode_dense(
            &g,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            &TruncationPolicy::exact(),
        )
        .unwrap();
        assert!((bell.mutual_information(0, 1).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(bell.mutual_information(0, 0).is_err());
        let prod = MpsState::random(grid1(5), 1, 2);
        assert!(prod.mutual_information(0, 4).unwrap().abs() < 1e-12);
        let r = MpsState::random(grid1(6), 4, 7);
        let m = r.mutual_information_matrix().unwrap();
        for l in 0..6 {
            for k in 0..6 {
                assert!(m[[l, k]] >= 0.0);
                assert_eq!(m[[l, k]], m[[k, l]]);
            }
        }
        assert!((r.mutual_information(4, 1).unwrap() - r.mutual_information(1, 4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_matches_dense_reduced_density() {
        let n = 5;
        let v = random_vector(1 << n, 13);
        let s = MpsState::encode_dense(&grid1(n), &v, &TruncationPolicy::exact()).unwrap();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let (l, m) = (1, 3);
        let bit = |c: usize, k: usize| (c >> (n - 1 - k)) & 1;
        let mut rho = Array2::<C64>::zeros((4, 4));
        for c in 0..1usize << n {
            for cp in 0..1usize << n {
                let same_rest = (0..n).filter(|&k| k != l && k != m).all(|k| bit(c, k) == bit(cp, k));
                if same_rest {
                    let i = 2 * bit(c, l) + bit(c, m);
                    let j = 2 * bit(cp, l) + bit(cp, m);
                    rho[[i, j]] += v[c] * v[cp].conj() / norm;
                }
            }
        }
        let ent = |r: &Array2<C64>| entropy(&r.eigh(UPLO::Lower).unwrap().0.iter().map(|&x| x.max(0.0)).collect::<Vec<_>>());
        let mut ra = Array2::<C64>::zeros((2, 2));
        let mut rb = Array2::<C64>::zeros((2, 2));
        for a in 0..2 {
            for b in 0..2 {
                for q in 0..2 {
                    ra[[a, b]] += rho[[2 * a + q, 2 * b + q]];
                    rb[[a, b]] += rho[[2 * q + a, 2 * q + b]];
                }
            }
        }
        let expected = ent(&ra) + ent(&rb) - ent(&rho);
        assert!((s.mutual_information(l, m).unwrap() - expected).abs() < 1e-12);
        assert!((s.mutual_information(m, l).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dense_cap_is_enforced() {
        let g = grid1(12);
        let s = MpsState::ones(g.clone());
        assert!(matches!(s.to_dense(1 << 10), Err(QgpeError::SizeCap { .. })));
        assert!(MpsState::encode_function_with_cap(&g, |_| C64::new(1.0, 0.0), &TruncationPolicy::default(), 1 << 10).is_err());
    }

    #[test]
    fn ordering_changes_layout_not_values() {
        let f = |x: &[f64]| C64::new((3.0 * x[0]).sin() + x[1], x[0] * x[1]);
        let mut decoded = Vec::new();
        for ord in [ScaleOrdering::sequential(), ScaleOrdering::interleaved(), ScaleOrdering::stair()] {
            let g = QuanticsGrid::new(2, 4, 2.0, ord).unwrap();
            let s = MpsState::encode_function(&g, f, &TruncationPolicy::default()).unwrap();
            decoded.push(s.decode_to_dense().unwrap());
        }
        assert!(max_err(&decoded[0], &decoded[1]) < 1e-12);
        assert!(max_err(&decoded[0], &decoded[2]) < 1e-12);
    }
}
