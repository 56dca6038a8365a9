//! Tuples of square matrices acting on the parties of a tensor.

use crate::error::{bail, Result};
use crate::linalg::{self, CMatrix};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTuple {
    factors: Vec<CMatrix>,
}

impl GroupTuple {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        if factors.is_empty() {
            bail!(InvalidArgument, "a group tuple needs at least one factor");
        }
        for (k, f) in factors.iter().enumerate() {
            if f.nrows() != f.ncols() {
                bail!(ShapeMismatch, "factor {} is {}x{}, not square", k + 1, f.nrows(), f.ncols());
            }
        }
        Ok(Self { factors })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&n| linalg::identity(n)).collect(),
        }
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<CMatrix> {
        self.factors
    }

    pub fn d(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Factor acting on party `i ∈ 1..=d`.
    pub fn factor(&self, i: usize) -> &CMatrix {
        &self.factors[i - 1]
    }

    pub fn set_factor(&mut self, i: usize, m: CMatrix) {
        assert_eq!(m.shape(), self.factors[i - 1].shape(), "factor shape must not change");
        self.factors[i - 1] = m;
    }

    /// Left-multiplies party `i` by `m`.
    pub fn premultiply(&mut self, i: usize, m: &CMatrix) {
        self.factors[i - 1] = m * &self.factors[i - 1];
    }

    /// Factorwise product `self · other`.
    pub fn compose(&self, other: &GroupTuple) -> Result<GroupTuple> {
        if self.dims() != other.dims() {
            bail!(ShapeMismatch, "cannot compose {:?} with {:?}", self.dims(), other.dims());
        }
        Ok(GroupTuple {
            factors: self.factors.iter().zip(&other.factors).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn inverse(&self) -> Result<GroupTuple> {
        Ok(GroupTuple {
            factors: self.factors.iter().map(linalg::inverse).collect::<Result<_>>()?,
        })
    }

    /// `(I ⊗ g^(1) ⊗ ⋯ ⊗ g^(d)) X`.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if self.dims() != x.format().dims() {
            bail!(
                ShapeMismatch,
                "group dims {:?} do not match tensor dims {:?}",
                self.dims(),
                x.format().dims()
            );
        }
        let mut y = x.clone();
        for (k, f) in self.factors.iter().enumerate() {
            if is_identity(f) {
                continue;
            }
            y = y.apply_axis(k + 1, f)?;
        }
        Ok(y)
    }

    /// Every factor invertible with finite condition number.
    pub fn is_invertible(&self) -> bool {
        self.factors.iter().all(|f| linalg::rank(f, 1e-14) == f.nrows())
    }
}

fn is_identity(m: &CMatrix) -> bool {
    m.iter().enumerate().all(|(k, z)| {
        let (i, j) = (k % m.nrows(), k / m.nrows());
        *z == if i == j { linalg::ONE } else { linalg::ZERO }
    })
}

/// Free-function form of [`GroupTuple::apply`].
pub fn apply_group(g: &GroupTuple, x: &Tensor) -> Result<Tensor> {
    g.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real_rows;
    use crate::tensor::TensorFormat;
    use num_complex::Complex64;

    #[test]
    fn identity_leaves_tensor_unchanged() {
        let x = Tensor::from_real(2, &[2, 3], &(0..12).map(f64::from).collect::<Vec<_>>()).unwrap();
        let g = GroupTuple::identity(&[2, 3]);
        assert_eq!(g.apply(&x).unwrap(), x);
    }

    #[test]
    fn single_party_is_right_multiplication_by_transpose() {
        // X as an n0 × n1 matrix; acting on axis 1 gives X gᵀ
        let x = Tensor::from_real(3, &[2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let g = from_real_rows(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let y = GroupTuple::new(vec![g.clone()]).unwrap().apply(&x).unwrap();
        let expected = x.flatten(&[0]).unwrap() * g.transpose();
        assert_eq!(y.flatten(&[0]).unwrap(), expected);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = Tensor::zeros(TensorFormat::new(1, vec![2, 2]).unwrap());
        assert!(GroupTuple::identity(&[2, 3]).apply(&x).is_err());
        assert!(GroupTuple::new(vec![CMatrix::zeros(2, 3)]).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let a = GroupTuple::new(vec![from_real_rows(&[&[2.0, 1.0], &[0.0, 1.0]])]).unwrap();
        let inv = a.inverse().unwrap();
        let id = a.compose(&inv).unwrap();
        assert!(linalg::frobenius(&(id.factor(1) - linalg::identity(2))) < 1e-14);
        let singular = GroupTuple::new(vec![CMatrix::from_element(2, 2, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(!singular.is_invertible());
        assert!(a.is_invertible());
    }
}
