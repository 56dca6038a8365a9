//! Targets with zero entries: restrict to the support, scale, pad back.

use crate::error::{bail, Result};
use crate::group::GroupTuple;
use crate::linalg::{self, CMatrix};
use crate::spectrum::TargetSpectrum;
use crate::tensor::Tensor;

use super::{marginal_distances, scale_from, Observer, RunParams, ScalingReport, Verdict};

/// Keeps the last `r_i` coordinates of every party, where `r_i` counts the
/// nonzero entries of `p^(i)`, and drops the zeros from `p`.
pub fn restrict_positive(x: &Tensor, p: &TargetSpectrum) -> Result<(Tensor, TargetSpectrum, Vec<usize>)> {
    if p.dims() != x.format().dims() {
        bail!(ShapeMismatch, "target dims {:?} do not match tensor dims {:?}", p.dims(), x.format().dims());
    }
    let ranks = p.ranks();
    if ranks.contains(&0) {
        bail!(InvalidArgument, "a target part is identically zero");
    }
    let mut out = x.clone();
    for (k, (&r, &n)) in ranks.iter().zip(x.format().dims()).enumerate() {
        if r < n {
            let keep: Vec<usize> = (n - r..n).collect();
            out = out.restrict_axis(k + 1, &keep)?;
        }
    }
    Ok((out, p.positive_part(), ranks))
}

/// Places `x_plus` in the last coordinates of a zero tensor with party dims `dims`.
pub fn embed_positive(x_plus: &Tensor, dims: &[usize]) -> Result<Tensor> {
    let small = x_plus.format().dims();
    if small.len() != dims.len() || small.iter().zip(dims).any(|(r, n)| r > n) {
        bail!(ShapeMismatch, "cannot embed {small:?} into {dims:?}");
    }
    let mut out = x_plus.clone();
    for (k, (&r, &n)) in small.iter().zip(dims).enumerate() {
        if r < n {
            let e = CMatrix::from_fn(n, r, |i, j| if i == n - r + j { linalg::ONE } else { linalg::ZERO });
            out = out.apply_axis(k + 1, &e)?;
        }
    }
    Ok(out)
}

/// `δ = min(ε^{1/d} / (4‖X‖), 10^{-3})`.
pub fn padding_delta(epsilon: f64, d: usize, norm_x: f64) -> f64 {
    (epsilon.powf(1.0 / d as f64) / (4.0 * norm_x)).min(1e-3)
}

/// Block-diagonal factors `δ·I_{n_i − r_i} ⊕ b_+^(i)`.
pub fn pad_with_delta(b_plus: &GroupTuple, dims: &[usize], delta: f64) -> Result<GroupTuple> {
    let small = b_plus.dims();
    if small.len() != dims.len() || small.iter().zip(dims).any(|(r, n)| r > n) {
        bail!(ShapeMismatch, "cannot pad {small:?} to {dims:?}");
    }
    let factors = b_plus
        .factors()
        .iter()
        .zip(dims)
        .map(|(b, &n)| {
            let off = n - b.nrows();
            CMatrix::from_fn(n, n, |i, j| {
                if i < off || j < off {
                    if i == j {
                        linalg::c(delta)
                    } else {
                        linalg::ZERO
                    }
                } else {
                    b[(i - off, j - off)]
                }
            })
        })
        .collect();
    GroupTuple::new(factors)
}

/// Pads a scaling of the restricted tensor to the full dimensions of `p`.
pub fn pad_scaling(b_plus: &GroupTuple, p: &TargetSpectrum, epsilon: f64, norm_x: f64) -> Result<GroupTuple> {
    pad_with_delta(b_plus, &p.dims(), padding_delta(epsilon, p.d(), norm_x))
}

const MAX_DELTA_SHRINKS: usize = 30;

pub(crate) fn scale_singular(
    x: &Tensor,
    p: &TargetSpectrum,
    run: &RunParams,
    start: GroupTuple,
    observer: Observer<'_>,
) -> Result<ScalingReport> {
    let z = start.apply(x)?;
    let (z_plus, p_plus, _) = restrict_positive(&z, p)?;
    if z_plus.is_zero() {
        return Ok(ScalingReport {
            verdict: Verdict::NotInPolytope,
            reason: "the tensor vanishes on the support of the targets".to_string(),
            final_distances: marginal_distances(&z, p),
            group: start,
            iterations: 0,
            trace: Vec::new(),
            budget_t: run.budget,
            warnings: Vec::new(),
        });
    }
    let inner_run = RunParams { epsilon: run.epsilon / 2.0, ..run.clone() };
    let plus_dims = z_plus.format().dims().to_vec();
    let mut inner = scale_from(&z_plus, &p_plus, &inner_run, GroupTuple::identity(&plus_dims), observer)?;
    if inner.verdict != Verdict::Scaled {
        inner.reason = format!("restricted tensor {:?}: {}", z_plus.format().dims(), inner.reason);
        inner.final_distances = marginal_distances(&normalize(&z), p);
        inner.group = start;
        return Ok(inner);
    }
    let mut delta = padding_delta(run.epsilon, p.d(), z.norm());
    for _ in 0..MAX_DELTA_SHRINKS {
        let padded = pad_with_delta(&inner.group, &p.dims(), delta)?;
        let mut g = padded.compose(&start)?;
        let y = g.apply(x)?;
        let ny = y.norm();
        let mut first = g.factor(1).clone();
        first /= linalg::c(ny);
        g.set_factor(1, first);
        let distances = marginal_distances(&normalize(&y), p);
        if distances.iter().all(|&e| e <= run.epsilon) {
            inner.group = g;
            inner.final_distances = distances;
            inner.reason = format!("{} (restricted to {:?}, padding δ = {delta:.3e})", inner.reason, plus_dims);
            return Ok(inner);
        }
        delta /= 10.0;
    }
    let padded = pad_with_delta(&inner.group, &p.dims(), delta)?;
    let g = padded.compose(&start)?;
    inner.final_distances = marginal_distances(&normalize(&g.apply(x)?), p);
    inner.verdict = Verdict::BudgetExhausted;
    inner.reason = "restricted tensor scaled but no padding reached the target accuracy".to_string();
    inner.group = g;
    Ok(inner)
}

fn normalize(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    let n = t.norm();
    if n > 0.0 {
        out.scale_in_place(1.0 / n);
    }
    out
}
