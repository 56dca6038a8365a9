//! Promise decision procedures built on the scaling engine.
//!
//! None of these claim exact membership: `EpsFar` means that no run out of
//! `R` seeded repetitions reached accuracy `ε`.

pub mod sinkhorn;

use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::group::GroupTuple;
use crate::partition::Partition;
use crate::scaling::{
    marginal_distances, run_general_scaling, run_scaling, IdentityParam, ScalingConfig, ScalingReport,
};
use crate::spectrum::{Rational, TargetSpectrum};
use crate::tensor::{Tensor, TensorFormat};

pub use sinkhorn::{sinkhorn, SinkhornResult, SinkhornStatus};

/// Default number of independent repetitions.
pub const DEFAULT_REPEATS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    In,
    EpsFar,
}

impl Answer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Answer::In => "IN",
            Answer::EpsFar => "EPS_FAR",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MembershipVerdict {
    pub answer: Answer,
    pub epsilon: f64,
    /// Scales [`Self::sample`] (or the input tensor) to ε-close marginals.
    pub witness: Option<GroupTuple>,
    /// The tensor the witness acts on when it was sampled internally.
    pub sample: Option<Tensor>,
    /// Report of the successful run with the lowest seed, or of the first run.
    pub evidence: ScalingReport,
    /// `(seed, verdict)` for every repetition, in seed order.
    pub runs: Vec<(u64, crate::scaling::Verdict)>,
}

impl MembershipVerdict {
    pub fn is_in(&self) -> bool {
        self.answer == Answer::In
    }
}

fn verified(x: &Tensor, g: &GroupTuple, p: &TargetSpectrum, epsilon: f64) -> Result<bool> {
    let mut y = g.apply(x)?;
    let n = y.norm();
    if !(n > 0.0) {
        return Ok(false);
    }
    y.scale_in_place(1.0 / n);
    Ok(marginal_distances(&y, p).iter().all(|&e| e <= epsilon))
}

/// Runs `R = repeats` seeded scalings (seeds `cfg.seed + r`) in parallel and
/// aggregates: `In` as soon as one run succeeds and its witness re-verifies.
pub fn membership(x: &Tensor, p: &TargetSpectrum, cfg: &ScalingConfig, repeats: usize) -> Result<MembershipVerdict> {
    if repeats == 0 {
        bail!(InvalidArgument, "at least one repetition is required");
    }
    let reports: Vec<Result<ScalingReport>> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| run_scaling(x, p, &cfg.clone().with_seed(cfg.seed.wrapping_add(r))))
        .collect();
    let reports: Vec<ScalingReport> = reports.into_iter().collect::<Result<_>>()?;
    let checks = reports
        .iter()
        .map(|rep| Ok(rep.is_scaled() && verified(x, &rep.group, p, cfg.epsilon)?))
        .collect::<Result<Vec<bool>>>()?;
    Ok(aggregate(reports, &checks, cfg, None))
}

fn aggregate(
    reports: Vec<ScalingReport>,
    checks: &[bool],
    cfg: &ScalingConfig,
    samples: Option<Vec<Tensor>>,
) -> MembershipVerdict {
    let runs = reports
        .iter()
        .enumerate()
        .map(|(r, rep)| (cfg.seed.wrapping_add(r as u64), rep.verdict))
        .collect();
    let winner = checks.iter().position(|&ok| ok);
    let pick = winner.unwrap_or(0);
    let evidence = reports.into_iter().nth(pick).expect("at least one report");
    MembershipVerdict {
        answer: if winner.is_some() { Answer::In } else { Answer::EpsFar },
        epsilon: cfg.epsilon,
        witness: winner.map(|_| evidence.group.clone()),
        sample: samples.and_then(|s| s.into_iter().nth(pick)),
        evidence,
        runs,
    }
}

/// One-body quantum marginal problem: is there a pure state in
/// `C^{n1} ⊗ ⋯ ⊗ C^{nd}` with marginal spectra ε-close to `p`?
pub fn qmp(p: &TargetSpectrum, cfg: &ScalingConfig, repeats: usize) -> Result<MembershipVerdict> {
    if repeats == 0 {
        bail!(InvalidArgument, "at least one repetition is required");
    }
    let phi = IdentityParam::new(TensorFormat::new(1, p.dims())?);
    let results: Vec<Result<(ScalingReport, Tensor)>> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| run_general_scaling(&phi, p, &cfg.clone().with_seed(cfg.seed.wrapping_add(r))))
        .collect();
    let results: Vec<(ScalingReport, Tensor)> = results.into_iter().collect::<Result<_>>()?;
    let (reports, samples): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let checks: Vec<bool> = reports
        .iter()
        .zip(&samples)
        .map(|(rep, x)| Ok(rep.is_scaled() && verified(x, &rep.group, p, cfg.epsilon)?))
        .collect::<Result<_>>()?;
    Ok(aggregate(reports, &checks, cfg, Some(samples)))
}

/// Three partitions of a common size `k`, padded to `n` parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KroneckerQuery {
    pub lambda: Partition,
    pub mu: Partition,
    pub nu: Partition,
    pub n: usize,
}

impl KroneckerQuery {
    /// `n` defaults to the largest number of parts.
    pub fn new(lambda: Partition, mu: Partition, nu: Partition, n: Option<usize>) -> Result<Self> {
        let k = lambda.size();
        if mu.size() != k || nu.size() != k {
            bail!(InvalidArgument, "partition sizes differ: {}, {}, {}", k, mu.size(), nu.size());
        }
        if k == 0 {
            bail!(InvalidArgument, "partitions must be nonempty");
        }
        let longest = lambda.len().max(mu.len()).max(nu.len());
        let n = n.unwrap_or(longest);
        if n < longest {
            bail!(InvalidArgument, "n = {n} is smaller than the longest partition ({longest} parts)");
        }
        Ok(Self { lambda, mu, nu, n })
    }

    pub fn size(&self) -> usize {
        self.lambda.size()
    }

    /// `(λ, μ, ν)/k`, each padded to length `n`.
    pub fn normalized_point(&self) -> Result<TargetSpectrum> {
        let k = self.size() as i64;
        let parts = [&self.lambda, &self.mu, &self.nu]
            .iter()
            .map(|p| Ok(p.padded(self.n)?.into_iter().map(|v| Rational::new(v as i64, k)).collect()))
            .collect::<Result<Vec<_>>>()?;
        TargetSpectrum::new(parts)
    }
}

/// Asymptotic Kronecker support: the normalized point, decided by [`qmp`]
/// on `C^n ⊗ C^n ⊗ C^n`.
pub fn kronecker_support(q: &KroneckerQuery, cfg: &ScalingConfig, repeats: usize) -> Result<MembershipVerdict> {
    qmp(&q.normalized_point()?, cfg, repeats)
}

/// `γ = exp(−C·(Σ n_i)·ln(ℓ·max n_j))`. A heuristic threshold: the constant
/// `C` is not known and must be supplied.
pub fn gap_constant(dims: &[usize], ell: u64, c: f64) -> Result<f64> {
    if !(c > 0.0) || dims.is_empty() || ell == 0 || dims.contains(&0) {
        bail!(InvalidArgument, "gap constant needs C > 0, ℓ ≥ 1 and positive dimensions");
    }
    let sum: usize = dims.iter().sum();
    let max = *dims.iter().max().expect("nonempty") as f64;
    Ok((-c * sum as f64 * (ell as f64 * max).ln()).exp())
}

/// Continued-fraction rationalization of floating targets.
pub fn rationalize_target(parts: &[Vec<f64>], cap: Option<i64>) -> Result<TargetSpectrum> {
    TargetSpectrum::from_f64(parts, cap.unwrap_or(crate::spectrum::DEFAULT_DENOMINATOR_CAP))
}
