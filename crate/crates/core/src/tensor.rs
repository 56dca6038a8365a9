//! Dense complex tensors of format `(n0; n1, …, nd)`.
//!
//! Axis 0 is the distinguished factor that the group never touches; axes
//! `1..=d` are the parties. Entries are stored row-major over
//! `(i0, i1, …, id)`.

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::hermitian::HermitianMatrix;
use crate::linalg::{CMatrix, ZERO};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorFormat {
    n0: usize,
    dims: Vec<usize>,
}

impl TensorFormat {
    pub fn new(n0: usize, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            bail!(InvalidArgument, "a tensor format needs at least one party");
        }
        if n0 == 0 || dims.contains(&0) {
            bail!(InvalidArgument, "dimensions must be positive, got ({n0}; {dims:?})");
        }
        Ok(Self { n0, dims })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Party dimensions `(n1, …, nd)`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of parties `d`.
    pub fn d(&self) -> usize {
        self.dims.len()
    }

    /// All axis sizes `(n0, n1, …, nd)`.
    pub fn axes(&self) -> Vec<usize> {
        let mut all = Vec::with_capacity(self.dims.len() + 1);
        all.push(self.n0);
        all.extend_from_slice(&self.dims);
        all
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n0
        } else {
            self.dims[axis - 1]
        }
    }

    pub fn total(&self) -> usize {
        self.n0 * self.dims.iter().product::<usize>()
    }

    /// Product `n1⋯nd`.
    pub fn party_product(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let axes = self.axes();
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1];
        }
        strides
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        let axes = self.axes();
        if idx.len() != axes.len() {
            bail!(ShapeMismatch, "index has {} components, format has {}", idx.len(), axes.len());
        }
        let mut off = 0;
        for (k, (&i, &n)) in idx.iter().zip(&axes).enumerate() {
            if i >= n {
                bail!(InvalidArgument, "index {i} out of range on axis {k} of size {n}");
            }
            off = off * n + i;
        }
        Ok(off)
    }

    /// Inverse of [`offset`](Self::offset).
    pub fn unravel(&self, mut off: usize) -> Vec<usize> {
        let axes = self.axes();
        let mut idx = vec![0; axes.len()];
        for k in (0..axes.len()).rev() {
            idx[k] = off % axes[k];
            off /= axes[k];
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    format: TensorFormat,
    entries: Vec<Complex64>,
}

impl Tensor {
    pub fn new(format: TensorFormat, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != format.total() {
            bail!(
                ShapeMismatch,
                "format {:?} needs {} entries, got {}",
                format.axes(),
                format.total(),
                entries.len()
            );
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            bail!(InvalidArgument, "tensor entries must be finite");
        }
        Ok(Self { format, entries })
    }

    pub fn zeros(format: TensorFormat) -> Self {
        let entries = vec![ZERO; format.total()];
        Self { format, entries }
    }

    pub fn from_fn(format: TensorFormat, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let entries = (0..format.total()).map(|off| f(&format.unravel(off))).collect();
        Self { format, entries }
    }

    /// Convenience constructor from real entries.
    pub fn from_real(n0: usize, dims: &[usize], values: &[f64]) -> Result<Self> {
        let format = TensorFormat::new(n0, dims.to_vec())?;
        Self::new(format, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn format(&self) -> &TensorFormat {
        &self.format
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn get(&self, idx: &[usize]) -> Result<Complex64> {
        Ok(self.entries[self.format.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) -> Result<()> {
        let off = self.format.offset(idx)?;
        self.entries[off] = value;
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == ZERO)
    }

    pub fn scaled(&self, s: Complex64) -> Tensor {
        Tensor {
            format: self.format.clone(),
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for z in &mut self.entries {
            *z *= s;
        }
    }

    /// True when every entry is a Gaussian integer.
    pub fn is_gaussian_integer(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.fract() == 0.0 && z.im.fract() == 0.0)
    }

    /// Largest bit length among the real and imaginary parts (at least 1).
    /// Non-integral entries count as 64 bits.
    pub fn bit_size(&self) -> u32 {
        let mut bits = 1;
        for z in &self.entries {
            for part in [z.re, z.im] {
                let b = if part.fract() != 0.0 || part.abs() >= 2f64.powi(63) {
                    64
                } else {
                    let v = part.abs() as u64;
                    64 - v.leading_zeros()
                };
                bits = bits.max(b);
            }
        }
        bits
    }

    /// Matricization with the axes in `rows` (sorted, ascending) enumerating
    /// rows and the remaining axes enumerating columns, both row-major.
    pub fn flatten(&self, rows: &[usize]) -> Result<CMatrix> {
        let axes = self.format.axes();
        let mut sorted = rows.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != rows.len() || sorted.is_empty() || sorted.len() >= axes.len() {
            bail!(InvalidArgument, "flatten needs a nonempty proper subset of axes, got {rows:?}");
        }
        if sorted.iter().any(|&a| a >= axes.len()) {
            bail!(InvalidArgument, "axis out of range in {rows:?}");
        }
        let cols: Vec<usize> = (0..axes.len()).filter(|a| !sorted.contains(a)).collect();
        let nr: usize = sorted.iter().map(|&a| axes[a]).product();
        let nc: usize = cols.iter().map(|&a| axes[a]).product();
        let mut m = CMatrix::zeros(nr, nc);
        for (off, z) in self.entries.iter().enumerate() {
            let idx = self.format.unravel(off);
            let r = sorted.iter().fold(0, |acc, &a| acc * axes[a] + idx[a]);
            let c = cols.iter().fold(0, |acc, &a| acc * axes[a] + idx[a]);
            m[(r, c)] = *z;
        }
        Ok(m)
    }

    /// Inverse of [`flatten`](Self::flatten) for the given format and row axes.
    pub fn unflatten(format: TensorFormat, rows: &[usize], m: &CMatrix) -> Result<Tensor> {
        let axes = format.axes();
        let mut sorted = rows.to_vec();
        sorted.sort_unstable();
        let cols: Vec<usize> = (0..axes.len()).filter(|a| !sorted.contains(a)).collect();
        let nr: usize = sorted.iter().map(|&a| axes[a]).product();
        let nc: usize = cols.iter().map(|&a| axes[a]).product();
        if m.nrows() != nr || m.ncols() != nc {
            bail!(ShapeMismatch, "matrix is {}x{}, expected {nr}x{nc}", m.nrows(), m.ncols());
        }
        Ok(Tensor::from_fn(format, |idx| {
            let r = sorted.iter().fold(0, |acc, &a| acc * axes[a] + idx[a]);
            let c = cols.iter().fold(0, |acc, &a| acc * axes[a] + idx[a]);
            m[(r, c)]
        }))
    }

    /// Raw Gram matrix of the flattening along a single axis.
    pub fn gram(&self, axis: usize) -> Result<CMatrix> {
        let axes = self.format.axes();
        if axis >= axes.len() {
            bail!(InvalidArgument, "axis {axis} out of range");
        }
        let n = axes[axis];
        let inner: usize = axes[axis + 1..].iter().product();
        let outer: usize = axes[..axis].iter().product();
        let mut g = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let mut acc = ZERO;
                for o in 0..outer {
                    let base = o * n * inner;
                    let ra = &self.entries[base + a * inner..base + (a + 1) * inner];
                    let rb = &self.entries[base + b * inner..base + (b + 1) * inner];
                    for (x, y) in ra.iter().zip(rb) {
                        acc += x * y.conj();
                    }
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        Ok(g)
    }

    /// One-body marginal `ρ^(i)` of party `i ∈ 1..=d`.
    pub fn marginal(&self, i: usize) -> Result<HermitianMatrix> {
        if i == 0 || i > self.format.d() {
            bail!(InvalidArgument, "party index {i} outside 1..={}", self.format.d());
        }
        Ok(HermitianMatrix::from_trusted(self.gram(i)?))
    }

    /// All marginals `ρ^(1), …, ρ^(d)`.
    pub fn marginals(&self) -> Vec<HermitianMatrix> {
        (1..=self.format.d())
            .map(|i| self.marginal(i).expect("axis in range"))
            .collect()
    }

    /// Contracts axis `axis` with `a` (shape `m × n_axis`); the axis becomes size `m`.
    pub fn apply_axis(&self, axis: usize, a: &CMatrix) -> Result<Tensor> {
        let axes = self.format.axes();
        if axis >= axes.len() {
            bail!(InvalidArgument, "axis {axis} out of range");
        }
        let n = axes[axis];
        if a.ncols() != n {
            bail!(ShapeMismatch, "matrix has {} columns, axis {axis} has size {n}", a.ncols());
        }
        let m = a.nrows();
        let inner: usize = axes[axis + 1..].iter().product();
        let outer: usize = axes[..axis].iter().product();
        let mut new_axes = axes.clone();
        new_axes[axis] = m;
        let format = TensorFormat::new(new_axes[0], new_axes[1..].to_vec())?;
        let mut out = vec![ZERO; outer * m * inner];
        for o in 0..outer {
            for r in 0..m {
                let dst = &mut out[(o * m + r) * inner..(o * m + r + 1) * inner];
                for cidx in 0..n {
                    let coef = a[(r, cidx)];
                    if coef == ZERO {
                        continue;
                    }
                    let src = &self.entries[(o * n + cidx) * inner..(o * n + cidx + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        Tensor::new(format, out)
    }

    /// Squared norm of each slice along `axis`.
    pub fn slice_weights(&self, axis: usize) -> Vec<f64> {
        let g = self.gram(axis).expect("axis in range");
        (0..g.nrows()).map(|k| g[(k, k)].re).collect()
    }

    /// Keeps only the coordinates in `keep` along `axis`.
    pub fn restrict_axis(&self, axis: usize, keep: &[usize]) -> Result<Tensor> {
        let n = self.format.axis_len(axis);
        if keep.iter().any(|&k| k >= n) {
            bail!(InvalidArgument, "restriction indices out of range for axis {axis}");
        }
        let sel = CMatrix::from_fn(keep.len(), n, |r, c| {
            if keep[r] == c {
                crate::linalg::ONE
            } else {
                ZERO
            }
        });
        self.apply_axis(axis, &sel)
    }
}
