//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{bail, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j]))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Relative deviation from Hermiticity, `‖A − A†‖_F / ‖A‖_F` (0 for the zero matrix).
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let norm = frobenius(m);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / norm
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// nonincreasing order with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * c(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 2 {
        // closed form keeps the hot 2×2 path allocation free
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return vec![mean + half, mean - half];
    }
    hermitian_eigen(m).0
}

/// Positive semidefinite square root, clipping tiny negative eigenvalues.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    &vectors * real_diag(&roots) * vectors.adjoint()
}

pub fn is_upper_triangular(m: &CMatrix, rel_tol: f64) -> bool {
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            if m[(i, j)].norm() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Offsets of consecutive blocks, e.g. `[1, 2]` → `[0, 1, 3]`.
pub fn block_offsets(blocks: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(blocks.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for b in blocks {
        acc += b;
        offsets.push(acc);
    }
    offsets
}

/// True when every entry strictly below the block diagonal vanishes.
pub fn is_block_upper_triangular(m: &CMatrix, blocks: &[usize], rel_tol: f64) -> bool {
    let offsets = block_offsets(blocks);
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    for (b, w) in offsets.windows(2).enumerate() {
        let (start, end) = (w[0], w[1]);
        for i in end..m.nrows() {
            for j in start..end {
                if m[(i, j)].norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        let _ = b;
    }
    true
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    match m.clone().try_inverse() {
        Some(inv) if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(inv),
        _ => bail!(Singular, "matrix of size {} is not invertible", m.nrows()),
    }
}

/// Numerical rank from singular values above `rel_tol · σ_max`.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
