//! Validated Hermitian matrices, spectra and the trace distance.

use crate::error::{bail, Result};
use crate::linalg::{self, CMatrix};

/// Relative Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates conjugate symmetry within `1e-12 · ‖A‖_F` and symmetrizes.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            bail!(ShapeMismatch, "Hermitian matrix must be square, got {}x{}", m.nrows(), m.ncols());
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > HERMITIAN_TOL {
            bail!(InvalidArgument, "matrix is not Hermitian (relative defect {defect:.3e})");
        }
        Ok(Self::from_trusted(m))
    }

    /// Skips validation; the input is symmetrized so round-off cannot leak.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        let sym = (&m + m.adjoint()) * linalg::c(0.5);
        Self(sym)
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        Self(linalg::real_diag(values))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.0).re
    }

    /// Eigenvalues in nonincreasing order.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().last().copied().unwrap_or(0.0)
    }

    /// Singular in the numeric sense: `λ_min ≤ 1e-12 · tr`.
    pub fn is_singular(&self) -> bool {
        let tr = self.trace();
        tr <= 0.0 || self.min_eigenvalue() <= 1e-12 * tr
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * linalg::c(s))
    }
}

/// Spectrum of a Hermitian matrix, validating Hermiticity first.
pub fn spectrum(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(HermitianMatrix::new(m.clone())?.spectrum())
}

/// `‖A − B‖_tr`, the sum of the absolute eigenvalues of `A − B`.
pub fn trace_distance(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.n() != b.n() {
        bail!(InvalidArgument, "trace distance of {}x{} and {}x{} matrices", a.n(), a.n(), b.n(), b.n());
    }
    let diff = HermitianMatrix::from_trusted(a.matrix() - b.matrix());
    Ok(diff.spectrum().iter().map(|v| v.abs()).sum())
}
