//! Tensor scaling to prescribed one-body marginal spectra.
//!
//! The crate scales a complex tensor `X ∈ Ten(n0; n1, …, nd)` by tuples of
//! upper-triangular (or block-upper-triangular) matrices until its one-body
//! marginals are ε-close to a target `diag(p_↑)`, and builds membership
//! oracles on top of that. Independent checks live in [`hwv`],
//! [`reduction`] and [`oracle::sinkhorn`].

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod group;
pub mod hermitian;
pub mod hwv;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod partition;
pub mod reduction;
pub mod scaling;
pub mod spectrum;
pub mod tensor;

pub use error::{Error, Result};
pub use group::{apply_group, GroupTuple};
pub use hermitian::{spectrum, trace_distance, HermitianMatrix};
pub use spectrum::{Rational, TargetSpectrum};
pub use tensor::{Tensor, TensorFormat};
