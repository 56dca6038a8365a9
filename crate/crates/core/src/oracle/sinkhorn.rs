//! Classical matrix scaling, the `d = 2` diagonal-support special case of
//! tensor scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SinkhornStatus {
    /// Both marginals within `ε` in ℓ1.
    Converged,
    /// The normalization budget ran out first.
    NotConverged,
    /// A zero row or column has a positive target.
    NotScalable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// `diag(x) A diag(y)`.
    pub matrix: DMatrix<f64>,
    pub row_scaling: DVector<f64>,
    pub col_scaling: DVector<f64>,
    pub status: SinkhornStatus,
    /// Single row or column normalizations performed.
    pub iterations: u64,
    pub row_error: f64,
    pub col_error: f64,
}

impl SinkhornResult {
    pub fn converged(&self) -> bool {
        self.status == SinkhornStatus::Converged
    }
}

fn l1(a: &DVector<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Alternately normalizes rows and columns of `A` to the targets `r`, `c`,
/// starting with rows. Each normalization counts as one iteration, so at
/// most `max_iter` are performed.
pub fn sinkhorn(a: &DMatrix<f64>, r: &[f64], c: &[f64], epsilon: f64, max_iter: u64) -> Result<SinkhornResult> {
    let (n, m) = a.shape();
    if r.len() != n || c.len() != m {
        bail!(ShapeMismatch, "targets of length {}, {} for a {n}x{m} matrix", r.len(), c.len());
    }
    if a.iter().chain(r).chain(c).any(|&v| v < 0.0 || !v.is_finite()) {
        bail!(InvalidArgument, "matrix and targets must be finite and nonnegative");
    }
    let (sr, sc): (f64, f64) = (r.iter().sum(), c.iter().sum());
    if (sr - sc).abs() > 1e-12 * sr.max(sc).max(1.0) {
        bail!(InvalidArgument, "row targets sum to {sr}, column targets to {sc}");
    }
    let mut x = DVector::from_element(n, 1.0);
    let mut y = DVector::from_element(m, 1.0);
    let zero_row = (0..n).any(|i| r[i] > 0.0 && a.row(i).iter().all(|&v| v == 0.0));
    let zero_col = (0..m).any(|j| c[j] > 0.0 && a.column(j).iter().all(|&v| v == 0.0));
    let scaled = |x: &DVector<f64>, y: &DVector<f64>| DMatrix::from_fn(n, m, |i, j| x[i] * a[(i, j)] * y[j]);
    let finish = |x: DVector<f64>, y: DVector<f64>, status, iterations| {
        let b = scaled(&x, &y);
        let row_error = l1(&b.column_sum(), r);
        let col_error = l1(&b.row_sum().transpose(), c);
        SinkhornResult { matrix: b, row_scaling: x, col_scaling: y, status, iterations, row_error, col_error }
    };
    if zero_row || zero_col {
        return Ok(finish(x, y, SinkhornStatus::NotScalable, 0));
    }
    let mut iterations = 0;
    loop {
        let b = scaled(&x, &y);
        let rows = b.column_sum();
        let cols = b.row_sum().transpose();
        if l1(&rows, r) <= epsilon && l1(&cols, c) <= epsilon {
            return Ok(finish(x, y, SinkhornStatus::Converged, iterations));
        }
        if iterations >= max_iter {
            return Ok(finish(x, y, SinkhornStatus::NotConverged, iterations));
        }
        if iterations % 2 == 0 {
            for i in 0..n {
                if rows[i] > 0.0 {
                    x[i] *= r[i] / rows[i];
                }
            }
        } else {
            for j in 0..m {
                if cols[j] > 0.0 {
                    y[j] *= c[j] / cols[j];
                }
            }
        }
        iterations += 1;
    }
}

/// The tensor in `Ten(nm; n, m)` with `X[(j,k), j, k] = √A_jk`; its two
/// marginals are `diag` of the row and column sums of `A`.
pub fn diagonal_support_tensor(a: &DMatrix<f64>) -> Result<crate::tensor::Tensor> {
    let (n, m) = a.shape();
    if a.iter().any(|&v| v < 0.0) {
        bail!(InvalidArgument, "matrix entries must be nonnegative");
    }
    let format = crate::tensor::TensorFormat::new(n * m, vec![n, m])?;
    Ok(crate::tensor::Tensor::from_fn(format, |idx| {
        if idx[0] == idx[1] * m + idx[2] {
            crate::linalg::c(a[(idx[1], idx[2])].sqrt())
        } else {
            crate::linalg::ZERO
        }
    }))
}
