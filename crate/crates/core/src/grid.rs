//! Quantics grids: binary encoding of a periodic box into a chain of qubits.
//!
//! Every axis of a box of side `L` is sampled at `2^N` points `x_m = L m / 2^N`.
//! Writing `m` in binary, `m = Σ_l n_l 2^(N-l)`, each bit `n_l` addresses the
//! length scale `L 2^-l` (level 1 is the coarsest). A [`ScaleOrdering`] decides
//! where each `(axis, level)` pair sits along the one-dimensional chain of the
//! matrix product state.

use serde::{Deserialize, Serialize};

use crate::error::{QgpeError, Result};

/// One qubit of the chain: the bit of `axis` that resolves the length scale
/// `L 2^-level`. Levels start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub axis: usize,
    pub level: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingKind {
    /// All qubits of one axis, coarse to fine, then the next axis.
    Sequential,
    /// Qubits of equal scale next to each other, coarse to fine.
    Interleaved,
    /// Axes alternate direction so neighbouring axes meet at equal scales.
    /// The first axis runs fine to coarse, so in 2D the two coarsest scales
    /// meet at the centre of the chain and in 3D the last axis joins through
    /// the finest scale.
    Stair,
    /// Stair variant whose first junction is through the finest scales
    /// (first axis coarse to fine, second fine to coarse, ...).
    StairSmallScale,
    /// Explicit slot list.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleOrdering {
    pub kind: OrderingKind,
    /// Order in which the axes are laid out along the chain.
    pub axis_permutation: Vec<usize>,
    /// Only used by [`OrderingKind::Custom`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<Vec<Slot>>,
}

impl ScaleOrdering {
    pub fn sequential() -> Self {
        Self::with_kind(OrderingKind::Sequential)
    }

    pub fn interleaved() -> Self {
        Self::with_kind(OrderingKind::Interleaved)
    }

    pub fn stair() -> Self {
        Self::with_kind(OrderingKind::Stair)
    }

    pub fn stair_small_scale() -> Self {
        Self::with_kind(OrderingKind::StairSmallScale)
    }

    /// Stair ordering with an explicit axis permutation, e.g. `[2, 0, 1]` for `zxy`.
    pub fn stair_with_axes(axes: &[usize]) -> Self {
        ScaleOrdering { kind: OrderingKind::Stair, axis_permutation: axes.to_vec(), custom: None }
    }

    pub fn custom(slots: Vec<Slot>) -> Self {
        ScaleOrdering { kind: OrderingKind::Custom, axis_permutation: Vec::new(), custom: Some(slots) }
    }

    fn with_kind(kind: OrderingKind) -> Self {
        ScaleOrdering { kind, axis_permutation: Vec::new(), custom: None }
    }

    /// Axis permutation, defaulting to the identity `x, y, z`.
    fn axes(&self, dims: usize) -> Vec<usize> {
        if self.axis_permutation.is_empty() {
            (0..dims).collect()
        } else {
            self.axis_permutation.clone()
        }
    }

    /// Lay out the slots of a grid with `bits[a]` qubits on axis `a`.
    pub fn slots(&self, bits: &[usize]) -> Result<Vec<Slot>> {
        let dims = bits.len();
        if self.kind == OrderingKind::Custom {
            let slots = self
                .custom
                .clone()
                .ok_or_else(|| QgpeError::Argument("custom ordering without slot list".into()))?;
            validate_slots(&slots, bits)?;
            return Ok(slots);
        }
        let axes = self.axes(dims);
        let mut seen = vec![false; dims];
        if axes.len() != dims {
            return Err(QgpeError::Argument(format!(
                "axis permutation {:?} does not match dimension {dims}",
                axes
            )));
        }
        for &a in &axes {
            if a >= dims || seen[a] {
                return Err(QgpeError::Argument(format!("invalid axis permutation {:?}", axes)));
            }
            seen[a] = true;
        }
        let forward = |a: usize| (1..=bits[a]).map(move |level| Slot { axis: a, level });
        let mut slots = Vec::with_capacity(bits.iter().sum());
        match self.kind {
            OrderingKind::Sequential => {
                for &a in &axes {
                    slots.extend(forward(a));
                }
            }
            OrderingKind::Interleaved => {
                let max = bits.iter().copied().max().unwrap_or(0);
                for level in 1..=max {
                    for &a in &axes {
                        if level <= bits[a] {
                            slots.push(Slot { axis: a, level });
                        }
                    }
                }
            }
            OrderingKind::Stair | OrderingKind::StairSmallScale => {
                let small_first = self.kind == OrderingKind::StairSmallScale;
                for (i, &a) in axes.iter().enumerate() {
                    let reversed = if small_first { i % 2 == 1 } else { dims >= 2 && i % 2 == 0 };
                    if reversed {
                        slots.extend(forward(a).collect::<Vec<_>>().into_iter().rev());
                    } else {
                        slots.extend(forward(a));
                    }
                }
            }
            OrderingKind::Custom => unreachable!(),
        }
        Ok(slots)
    }
}

fn validate_slots(slots: &[Slot], bits: &[usize]) -> Result<()> {
    let total: usize = bits.iter().sum();
    if slots.len() != total {
        return Err(QgpeError::Argument(format!(
            "ordering has {} slots, grid needs {total}",
            slots.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for s in slots {
        if s.axis >= bits.len() || s.level == 0 || s.level > bits[s.axis] || !seen.insert(*s) {
            return Err(QgpeError::Argument(format!("ordering slot {:?} is invalid or repeated", s)));
        }
    }
    Ok(())
}

/// A periodic box `[0, L)^d` sampled by `2^bits[a]` points along axis `a`.
///
/// Grids are normally uniform (same qubit count on every axis); ragged grids
/// only appear transiently while refining one axis at a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuanticsGrid {
    bits: Vec<usize>,
    length: f64,
    ordering: ScaleOrdering,
    #[serde(skip)]
    slots: Vec<Slot>,
}

impl QuanticsGrid {
    /// `dims`-dimensional grid with `n` qubits per axis and box side `length` (in ξ).
    pub fn new(dims: usize, n: usize, length: f64, ordering: ScaleOrdering) -> Result<Self> {
        if !(1..=3).contains(&dims) {
            return Err(QgpeError::Argument(format!("dimension must be 1, 2 or 3, got {dims}")));
        }
        Self::with_axis_bits(vec![n; dims], length, ordering)
    }

    pub fn with_axis_bits(bits: Vec<usize>, length: f64, ordering: ScaleOrdering) -> Result<Self> {
        if bits.is_empty() || bits.contains(&0) {
            return Err(QgpeError::Argument(format!("every axis needs at least one qubit: {:?}", bits)));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(QgpeError::Argument(format!("box length must be positive, got {length}")));
        }
        let slots = ordering.slots(&bits)?;
        Ok(QuanticsGrid { bits, length, ordering, slots })
    }

    /// Rebuild derived data after deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::with_axis_bits(self.bits, self.length, self.ordering)
    }

    pub fn dims(&self) -> usize {
        self.bits.len()
    }

    /// Qubits per axis.
    pub fn bits(&self) -> &[usize] {
        &self.bits
    }

    /// Qubits of axis 0; equal to every axis on uniform grids.
    pub fn n(&self) -> usize {
        self.bits[0]
    }

    pub fn is_uniform(&self) -> bool {
        self.bits.iter().all(|&b| b == self.bits[0])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn ordering(&self) -> &ScaleOrdering {
        &self.ordering
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n_sites(&self) -> usize {
        self.slots.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length / (1u64 << self.bits[axis]) as f64
    }

    /// Points along `axis`.
    pub fn axis_points(&self, axis: usize) -> usize {
        1usize << self.bits[axis]
    }

    /// Row-major shape, axis order x, y, z.
    pub fn shape(&self) -> Vec<usize> {
        (0..self.dims()).map(|a| self.axis_points(a)).collect()
    }

    /// Total number of grid points `2^(Σ bits)`.
    pub fn total_points(&self) -> u128 {
        1u128 << self.n_sites()
    }

    /// Volume element `Π h_a`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dims() as i32)
    }

    /// Physical coordinates of the point addressed by per-axis bit vectors
    /// (`bits[a][l-1]` is the bit of level `l`).
    pub fn index_to_coordinate(&self, bits: &[Vec<u8>]) -> Result<Vec<f64>> {
        if bits.len() != self.dims() {
            return Err(QgpeError::Argument(format!(
                "expected {} bit vectors, got {}",
                self.dims(),
                bits.len()
            )));
        }
        bits.iter()
            .enumerate()
            .map(|(a, b)| {
                if b.len() != self.bits[a] {
                    return Err(QgpeError::Argument(format!(
                        "axis {a} needs {} bits, got {}",
                        self.bits[a],
                        b.len()
                    )));
                }
                let mut x = 0.0;
                for (l, &bit) in b.iter().enumerate() {
                    if bit > 1 {
                        return Err(QgpeError::Argument(format!("bit value {bit} is not 0 or 1")));
                    }
                    x += bit as f64 / (1u64 << (l + 1)) as f64;
                }
                Ok(self.length * x)
            })
            .collect()
    }

    /// Linear index along one axis from its bit vector (`m = Σ n_l 2^(N-l)`).
    pub fn bits_to_index(bits: &[u8]) -> usize {
        bits.iter().fold(0usize, |m, &b| (m << 1) | b as usize)
    }

    /// Per-axis indices of the point whose chain bit string (site 0 most
    /// significant) is `chain`.
    pub fn chain_to_axes(&self, chain: usize) -> Vec<usize> {
        let n = self.n_sites();
        let mut idx = vec![0usize; self.dims()];
        for (k, s) in self.slots.iter().enumerate() {
            let bit = (chain >> (n - 1 - k)) & 1;
            idx[s.axis] |= bit << (self.bits[s.axis] - s.level);
        }
        idx
    }

    /// Row-major linear index of per-axis indices.
    pub fn row_major(&self, idx: &[usize]) -> usize {
        idx.iter().enumerate().fold(0usize, |acc, (a, &i)| acc * self.axis_points(a) + i)
    }

    /// For each chain index, the row-major grid index it addresses.
    pub fn chain_to_row_major_map(&self) -> Vec<usize> {
        let n = self.n_sites();
        // Per-site contribution to the row-major index; the map is additive.
        let strides: Vec<usize> = (0..self.dims())
            .map(|a| (a + 1..self.dims()).map(|b| self.axis_points(b)).product())
            .collect();
        let contrib: Vec<usize> = self
            .slots
            .iter()
            .map(|s| strides[s.axis] << (self.bits[s.axis] - s.level))
            .collect();
        let mut map = vec![0usize; 1 << n];
        for (k, c) in contrib.iter().enumerate() {
            let bit = 1usize << (n - 1 - k);
            let block = bit;
            // Indices with this bit set inherit the contribution.
            let mut start = 0;
            while start < map.len() {
                for i in start + block..start + 2 * block {
                    map[i] += c;
                }
                start += 2 * block;
            }
        }
        map
    }

    /// Coordinates of every grid point, row-major.
    pub fn coordinates(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(a, &i)| i as f64 * self.spacing(a)).collect()
    }

    /// Grid with one more (finer) qubit on `axis`, and the chain position at
    /// which the new slot appears.
    pub fn refined(&self, axis: usize) -> Result<(QuanticsGrid, usize)> {
        if axis >= self.dims() {
            return Err(QgpeError::Argument(format!("axis {axis} out of range")));
        }
        if self.ordering.kind == OrderingKind::Custom {
            return Err(QgpeError::Argument("cannot refine a custom-ordered grid".into()));
        }
        let mut bits = self.bits.clone();
        bits[axis] += 1;
        let fine = QuanticsGrid::with_axis_bits(bits, self.length, self.ordering.clone())?;
        let new_slot = Slot { axis, level: fine.bits[axis] };
        let pos = fine
            .slots
            .iter()
            .position(|s| *s == new_slot)
            .expect("refined grid contains its new slot");
        let mut rest = fine.slots.clone();
        rest.remove(pos);
        debug_assert_eq!(rest, self.slots);
        Ok((fine, pos))
    }

    /// Same grid with a different ordering.
    pub fn reordered(&self, ordering: ScaleOrdering) -> Result<QuanticsGrid> {
        QuanticsGrid::with_axis_bits(self.bits.clone(), self.length, ordering)
    }

    pub fn same_shape(&self, other: &QuanticsGrid) -> bool {
        self.bits == other.bits && (self.length - other.length).abs() <= 1e-12 * self.length
    }
}
