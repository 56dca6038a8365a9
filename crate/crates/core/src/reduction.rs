//! Reduction of nonuniform Borel scaling to uniform scaling.
//!
//! For a partition `λ` of `ℓ` with exactly `n` nonzero parts and conjugate
//! `μ`, the maps `τ_j: C^n → C^ℓ` place the last `μ_j` coordinates of a
//! vector into block `j`. `L_λ v = Σ_j e_j ⊗ τ_j v` then intertwines the
//! Borel action on `C^n` with `b ↦ I ⊗ T̲(b)` on `C^{λ_1} ⊗ C^ℓ`.

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::hermitian::HermitianMatrix;
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::partition::Partition;
use crate::tensor::{Tensor, TensorFormat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionData {
    lambda: Partition,
    mu: Partition,
    offsets: Vec<usize>,
}

impl ReductionData {
    /// Requires exactly `n` nonzero parts; zero parts must be removed by
    /// restricting to the support first.
    pub fn new(lambda: Partition, n: usize) -> Result<Self> {
        if lambda.len() != n {
            bail!(InvalidArgument, "partition {:?} must have exactly {n} nonzero parts", lambda.parts());
        }
        let mu = lambda.conjugate();
        let offsets = linalg::block_offsets(mu.parts());
        Ok(Self { lambda, mu, offsets })
    }

    pub fn lambda(&self) -> &Partition {
        &self.lambda
    }

    pub fn mu(&self) -> &Partition {
        &self.mu
    }

    pub fn ell(&self) -> usize {
        self.lambda.size()
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `λ_1`, the number of `τ` blocks.
    pub fn blocks(&self) -> usize {
        self.mu.len()
    }

    /// `Λ = diag(λ_↑)`.
    pub fn big_lambda(&self) -> Vec<f64> {
        self.lambda.parts().iter().rev().map(|&v| v as f64).collect()
    }

    /// The block `j` (1-based) containing coordinate `s` of `C^ℓ`, and the
    /// coordinate of `C^n` it copies.
    fn source(&self, s: usize) -> (usize, usize) {
        let j = self.offsets.partition_point(|&o| o <= s) - 1;
        let mu_j = self.mu.parts()[j];
        (j, self.n() - mu_j + (s - self.offsets[j]))
    }
}

pub fn conjugate_partition(lambda: &Partition) -> Partition {
    lambda.conjugate()
}

/// `τ_j` as an `ℓ × n` matrix, `j` in `1..=λ_1`.
pub fn tau(rd: &ReductionData, j: usize) -> Result<CMatrix> {
    if j == 0 || j > rd.blocks() {
        bail!(InvalidArgument, "τ index {j} outside 1..={}", rd.blocks());
    }
    let (ell, n) = (rd.ell(), rd.n());
    let mu_j = rd.mu.parts()[j - 1];
    let off = rd.offsets[j - 1];
    let mut m = CMatrix::zeros(ell, n);
    for t in 0..mu_j {
        m[(off + t, n - mu_j + t)] = ONE;
    }
    Ok(m)
}

/// `L_λ` as a `(λ_1 ℓ) × n` matrix, rows indexed by `(j, s)` row-major.
pub fn l_matrix(rd: &ReductionData) -> CMatrix {
    let (ell, n) = (rd.ell(), rd.n());
    let mut m = CMatrix::zeros(rd.blocks() * ell, n);
    for s in 0..ell {
        let (j, src) = rd.source(s);
        m[(j * ell + s, src)] = ONE;
    }
    m
}

fn check_square(x: &CMatrix, n: usize) -> Result<()> {
    if x.nrows() != n || x.ncols() != n {
        bail!(ShapeMismatch, "expected a {n}x{n} matrix, got {}x{}", x.nrows(), x.ncols());
    }
    Ok(())
}

/// `T̲(X) = Σ_j τ_j X τ_j†`: block diagonal with the bottom-right
/// `μ_j × μ_j` corner of `X` in block `j`.
pub fn t_underline(rd: &ReductionData, x: &CMatrix) -> Result<CMatrix> {
    check_square(x, rd.n())?;
    let ell = rd.ell();
    let mut out = CMatrix::zeros(ell, ell);
    for s in 0..ell {
        let (j, a) = rd.source(s);
        for t in rd.offsets[j]..rd.offsets[j + 1] {
            out[(s, t)] = x[(a, rd.source(t).1)];
        }
    }
    Ok(out)
}

/// `T̲*(Y) = Σ_j τ_j† Y τ_j`.
pub fn t_underline_adjoint(rd: &ReductionData, y: &CMatrix) -> Result<CMatrix> {
    check_square(y, rd.ell())?;
    let n = rd.n();
    let mut out = CMatrix::zeros(n, n);
    for s in 0..rd.ell() {
        let (j, a) = rd.source(s);
        for t in rd.offsets[j]..rd.offsets[j + 1] {
            out[(a, rd.source(t).1)] += y[(s, t)];
        }
    }
    Ok(out)
}

fn lambda_power(rd: &ReductionData, e: f64) -> CMatrix {
    let v: Vec<f64> = rd.big_lambda().iter().map(|x| x.powf(e)).collect();
    linalg::real_diag(&v)
}

/// `T(X) = T̲(Λ^{-1/2} X Λ^{-1/2})`.
pub fn t_map(rd: &ReductionData, x: &CMatrix) -> Result<CMatrix> {
    check_square(x, rd.n())?;
    let s = lambda_power(rd, -0.5);
    t_underline(rd, &(&s * x * &s))
}

/// `T*(Y) = Λ^{-1/2} T̲*(Y) Λ^{-1/2}`.
pub fn t_map_adjoint(rd: &ReductionData, y: &CMatrix) -> Result<CMatrix> {
    let s = lambda_power(rd, -0.5);
    Ok(&s * t_underline_adjoint(rd, y)? * &s)
}

/// `h(b) = T̲(Λ^{-1/2} b Λ^{1/2})`, a homomorphism on upper-triangular `b`.
pub fn h_hom(rd: &ReductionData, b: &CMatrix) -> Result<CMatrix> {
    check_square(b, rd.n())?;
    t_underline(rd, &(lambda_power(rd, -0.5) * b * lambda_power(rd, 0.5)))
}

fn reduction_data(y: &Tensor, lambdas: &[Partition]) -> Result<Vec<ReductionData>> {
    let dims = y.format().dims();
    if lambdas.len() != dims.len() {
        bail!(InvalidArgument, "{} partitions for {} parties", lambdas.len(), dims.len());
    }
    lambdas.iter().zip(dims).map(|(l, &n)| ReductionData::new(l.clone(), n)).collect()
}

/// `L(Y) = (I ⊗ L_{λ^(1)} ⊗ ⋯ ⊗ L_{λ^(d)}) Y`, with the `λ_1^(i)` factors
/// folded into axis 0 as `(i_0, j_1, …, j_d)` row-major.
pub fn reduce_tensor(y: &Tensor, lambdas: &[Partition]) -> Result<Tensor> {
    let rds = reduction_data(y, lambdas)?;
    expand(y, &rds)
}

/// `L(Λ^{-1/2}·Y)`, whose marginals are `T_{λ^(i)}(ρ^(i))`.
pub fn reduce_tensor_normalized(y: &Tensor, lambdas: &[Partition]) -> Result<Tensor> {
    let rds = reduction_data(y, lambdas)?;
    let mut z = y.clone();
    for (i, rd) in rds.iter().enumerate() {
        z = z.apply_axis(i + 1, &lambda_power(rd, -0.5))?;
    }
    expand(&z, &rds)
}

fn expand(y: &Tensor, rds: &[ReductionData]) -> Result<Tensor> {
    let n0 = y.format().n0();
    let block_counts: Vec<usize> = rds.iter().map(ReductionData::blocks).collect();
    let new_n0 = n0 * block_counts.iter().product::<usize>();
    let format = TensorFormat::new(new_n0, rds.iter().map(ReductionData::ell).collect())?;
    let strides = y.format().strides();
    let entries = y.entries();
    let d = rds.len();
    Ok(Tensor::from_fn(format, |idx| {
        let mut rest = idx[0];
        let mut js = vec![0; d];
        for i in (0..d).rev() {
            js[i] = rest % block_counts[i];
            rest /= block_counts[i];
        }
        let mut off = rest * strides[0];
        for i in 0..d {
            let (j, src) = rds[i].source(idx[i + 1]);
            if j != js[i] {
                return ZERO;
            }
            off += src * strides[i + 1];
        }
        entries[off]
    }))
}

/// `T(ρ)` restricted to one party: the marginal `ρ ↦ T_λ(ρ)`.
pub fn transported_marginal(rd: &ReductionData, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::from_trusted(t_map(rd, rho.matrix())?))
}

/// `det T̲(b)`, computed blockwise.
pub fn det_t_underline(rd: &ReductionData, b: &CMatrix) -> Result<Complex64> {
    let t = t_underline(rd, b)?;
    let mut det = ONE;
    for (j, w) in rd.offsets.windows(2).enumerate() {
        let size = rd.mu.parts()[j];
        det *= t.view((w[0], w[0]), (size, size)).into_owned().determinant();
    }
    Ok(det)
}

#[cfg(test)]
mod tests;
