//! The scaling engine: randomized Borel and parabolic alternating scaling.
//!
//! A run randomizes the starting group element, rejects tensors with a
//! singular marginal, and then repeatedly fixes the marginal that is
//! farthest from its target `diag(p_↑)` using a (block) upper-triangular
//! square root of that marginal.

pub mod cholesky;
pub mod param;
pub mod random;
pub mod singular;

use crate::error::{bail, Error, Result};
use crate::group::GroupTuple;
use crate::hermitian::{trace_distance, HermitianMatrix};
use crate::linalg::{self, CMatrix};
use crate::spectrum::TargetSpectrum;
use crate::tensor::Tensor;

pub use cholesky::{block_cholesky, upper_cholesky};
pub use param::{mps_tensor, run_general_scaling, IdentityParam, MpsParam, OrbitParam, Parametrization};
pub use random::{random_group, randomization_bounds};
pub use singular::{embed_positive, pad_scaling, restrict_positive};

/// Log-scale slack below `ln(1/(n1⋯nd))` before the capacity certificate fires.
pub const CAPACITY_SLACK: f64 = 1e-6;

/// Default practical randomization range, `2^16`.
pub const DEFAULT_RAND_RANGE: u64 = 1 << 16;

/// Which subgroup supplies the square roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Upper-triangular Cholesky factors.
    Borel,
    /// Block-upper-triangular factors with blocks given by repeated target entries.
    Parabolic,
}

/// Where the entries of the random starting element come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandRange {
    /// Uniform integers in `{1, …, r}`.
    Practical(u64),
    /// Uniform integers up to the exact bound `M = 2dK`.
    Theoretical,
    /// Start from the identity.
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub epsilon: f64,
    pub seed: u64,
    pub rand_range: RandRange,
    /// Replaces the computed iteration budget when set.
    pub max_iters: Option<u64>,
    pub mode: Mode,
    /// Keep per-iteration records in the report.
    pub record_trace: bool,
}

impl ScalingConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            seed: 0,
            rand_range: RandRange::Practical(DEFAULT_RAND_RANGE),
            max_iters: None,
            mode: Mode::Borel,
            record_trace: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_rand_range(mut self, range: RandRange) -> Self {
        self.rand_range = range;
        self
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            bail!(InvalidArgument, "epsilon must be positive and finite, got {}", self.epsilon);
        }
        if let RandRange::Practical(r) = self.rand_range {
            if r < 2 {
                bail!(InvalidArgument, "randomization range must be at least 2, got {r}");
            }
        }
        if self.max_iters == Some(0) {
            bail!(InvalidArgument, "max iterations must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Scaled,
    NotInPolytope,
    /// The iteration budget ran out; decision-wise this means "not in the polytope".
    BudgetExhausted,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Scaled => "SCALED",
            Verdict::NotInPolytope => "NOT_IN_POLYTOPE",
            Verdict::BudgetExhausted => "BUDGET_EXHAUSTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Party chosen for this step (1-based); on the final record, the argmax.
    pub index: usize,
    pub distances: Vec<f64>,
    pub norm: f64,
    /// Capacity objective `‖B·Z‖·|χ_{p*}(B)|` of the accumulated element.
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub verdict: Verdict,
    pub reason: String,
    pub group: GroupTuple,
    /// Number of scaling steps performed.
    pub iterations: u64,
    pub trace: Vec<IterationRecord>,
    pub budget_t: u64,
    /// Distances of `group·X` recomputed from scratch at the end.
    pub final_distances: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ScalingReport {
    pub fn is_scaled(&self) -> bool {
        self.verdict == Verdict::Scaled
    }

    pub fn max_distance(&self) -> f64 {
        self.final_distances.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest logged capacity along the run.
    pub fn min_capacity(&self) -> Option<f64> {
        self.trace
            .iter()
            .filter_map(|r| r.capacity)
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c))))
    }
}

/// One scaling step as seen by an observer.
pub struct StepEvent<'a> {
    pub iteration: u64,
    /// Party that was scaled (1-based).
    pub index: usize,
    pub distances: &'a [f64],
    /// Unit-norm iterate before the step.
    pub before: &'a Tensor,
    /// Unit-norm iterate after the step.
    pub after: &'a Tensor,
    /// The applied factor `diag(p_↑)^{1/2} R^{-1}`.
    pub update: &'a CMatrix,
}

pub type Observer<'o> = &'o mut dyn FnMut(&StepEvent<'_>);

/// `diag(p_↑^(i))` for party `i`.
pub fn target_matrix(p: &TargetSpectrum, i: usize) -> HermitianMatrix {
    HermitianMatrix::from_real_diag(&p.increasing(i))
}

/// `ε^(i) = ‖ρ^(i) − diag(p_↑^(i))‖_tr` for every party.
pub fn marginal_distances(y: &Tensor, p: &TargetSpectrum) -> Vec<f64> {
    (1..=p.d())
        .map(|i| {
            let rho = y.marginal(i).expect("party in range");
            trace_distance(&rho, &target_matrix(p, i)).expect("dimensions agree")
        })
        .collect()
}

/// Largest distance, ties broken towards the smallest index (1-based).
pub fn select_index(distances: &[f64]) -> usize {
    let mut best = 0;
    for (k, &e) in distances.iter().enumerate() {
        if e > distances[best] {
            best = k;
        }
    }
    best + 1
}

/// Block structure used by the factorization for party `i`.
pub fn step_blocks(p: &TargetSpectrum, i: usize, mode: Mode) -> Vec<usize> {
    match mode {
        Mode::Borel => vec![1; p.part(i).len()],
        Mode::Parabolic => p.blocks(i),
    }
}

/// The update `diag(p_↑^(i))^{1/2} R^{-1}` for the current iterate.
pub fn step_update(y: &Tensor, p: &TargetSpectrum, i: usize, mode: Mode) -> Result<CMatrix> {
    let rho = y.marginal(i)?;
    let r = block_cholesky(&rho, &step_blocks(p, i, mode))?;
    let roots: Vec<f64> = p.increasing(i).iter().map(|v| v.sqrt()).collect();
    Ok(linalg::real_diag(&roots) * linalg::inverse(&r)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub group: GroupTuple,
    pub index: usize,
    pub distances: Vec<f64>,
}

/// One step of the iteration on `Y = g·X`: picks the farthest marginal and
/// updates that factor of `g`.
pub fn scaling_step(g: &GroupTuple, x: &Tensor, p: &TargetSpectrum, mode: Mode) -> Result<StepOutcome> {
    check_shapes(x, p)?;
    let y = g.apply(x)?;
    let distances = marginal_distances(&y, p);
    let index = select_index(&distances);
    let update = step_update(&y, p, index, mode)?;
    let mut group = g.clone();
    group.premultiply(index, &update);
    Ok(StepOutcome { group, index, distances })
}

fn budget_from(value: f64) -> u64 {
    if !value.is_finite() || value >= u64::MAX as f64 {
        u64::MAX
    } else {
        (value.ceil() as u64).max(1)
    }
}

/// `T = ⌈(32 ln2/ε²)(3 Σ_{i=0}^d log2 n_i + b + d·log2 M)⌉`, at least 1.
/// `all_dims` includes `n0`.
pub fn iteration_budget(all_dims: &[usize], bits: u32, epsilon: f64, log2_m: f64) -> u64 {
    let d = all_dims.len().saturating_sub(1) as f64;
    let logs: f64 = all_dims.iter().map(|&n| (n as f64).log2()).sum();
    let value = 32.0 * std::f64::consts::LN_2 / (epsilon * epsilon) * (3.0 * logs + bits as f64 + d * log2_m);
    budget_from(value)
}

/// Budget for parametrized inputs:
/// `T = ⌈(16 ln2/ε²)(Σ_{i=0}^d log2 n_i + b + deg Φ·(log2 p + log2 M))⌉`, at least 1.
pub fn general_iteration_budget(
    all_dims: &[usize],
    bits: u32,
    epsilon: f64,
    degree: u32,
    param_dim: usize,
    log2_m: f64,
) -> u64 {
    let logs: f64 = all_dims.iter().map(|&n| (n as f64).log2()).sum();
    let value = 16.0 * std::f64::consts::LN_2 / (epsilon * epsilon)
        * (logs + bits as f64 + degree as f64 * ((param_dim as f64).log2() + log2_m));
    budget_from(value)
}

/// Bit size of the targets: the longest numerator or denominator.
pub fn spectrum_bit_size(p: &TargetSpectrum) -> u32 {
    p.parts()
        .iter()
        .flatten()
        .map(|q| {
            let n = 64 - q.numer().unsigned_abs().leading_zeros();
            let d = 64 - q.denom().unsigned_abs().leading_zeros();
            n.max(d)
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

fn check_shapes(x: &Tensor, p: &TargetSpectrum) -> Result<()> {
    if p.dims() != x.format().dims() {
        bail!(
            ShapeMismatch,
            "target dims {:?} do not match tensor dims {:?}",
            p.dims(),
            x.format().dims()
        );
    }
    Ok(())
}

/// Uniform targets in parabolic mode need no randomization at all.
pub(crate) fn skips_randomization(p: &TargetSpectrum, mode: Mode) -> bool {
    mode == Mode::Parabolic && p.is_uniform()
}

/// Starting element and `log2` of the range used, per the configuration.
pub(crate) fn starting_group(dims: &[usize], p: &TargetSpectrum, cfg: &ScalingConfig) -> (GroupTuple, f64) {
    if skips_randomization(p, cfg.mode) {
        return (GroupTuple::identity(dims), 0.0);
    }
    match cfg.rand_range {
        RandRange::Disabled => (GroupTuple::identity(dims), 0.0),
        RandRange::Practical(r) => (random::random_group(dims, r, cfg.seed), (r as f64).log2()),
        RandRange::Theoretical => {
            let (_, m) = randomization_bounds(p.lcm() as u64, dims.len(), dims);
            (random::random_group_big(dims, &m, cfg.seed), random::log2_big(&m))
        }
    }
}

/// Runs the randomized scaling algorithm.
pub fn run_scaling(x: &Tensor, p: &TargetSpectrum, cfg: &ScalingConfig) -> Result<ScalingReport> {
    run_scaling_observed(x, p, cfg, &mut |_| {})
}

/// [`run_scaling`] with a callback after every step.
pub fn run_scaling_observed(
    x: &Tensor,
    p: &TargetSpectrum,
    cfg: &ScalingConfig,
    observer: Observer<'_>,
) -> Result<ScalingReport> {
    cfg.validate()?;
    check_shapes(x, p)?;
    if x.is_zero() {
        bail!(InvalidArgument, "cannot scale the zero tensor");
    }
    let mut warnings = Vec::new();
    if !x.is_gaussian_integer() {
        warnings.push("input has non-integral entries; bit size taken as 64".to_string());
    }
    let dims = x.format().dims().to_vec();
    let (start, log2_m) = starting_group(&dims, p, cfg);
    let bits = x.bit_size().max(spectrum_bit_size(p));
    let budget = cfg
        .max_iters
        .unwrap_or_else(|| iteration_budget(&x.format().axes(), bits, cfg.epsilon, log2_m));
    let run = RunParams { epsilon: cfg.epsilon, mode: cfg.mode, budget, record_trace: cfg.record_trace };
    let mut report = if p.has_zeros() {
        singular::scale_singular(x, p, &run, start, observer)?
    } else {
        scale_from(x, p, &run, start, observer)?
    };
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

#[derive(Debug, Clone)]
pub(crate) struct RunParams {
    pub epsilon: f64,
    pub mode: Mode,
    pub budget: u64,
    pub record_trace: bool,
}

/// The singularity check and the scaling loop from a given starting element.
pub(crate) fn scale_from(
    x: &Tensor,
    p: &TargetSpectrum,
    run: &RunParams,
    start: GroupTuple,
    observer: Observer<'_>,
) -> Result<ScalingReport> {
    let d = p.d();
    let z = start.apply(x)?;
    for i in 1..=d {
        if z.marginal(i)?.is_singular() {
            return Ok(ScalingReport {
                verdict: Verdict::NotInPolytope,
                reason: format!("marginal {i} of the randomized tensor is singular"),
                final_distances: marginal_distances(&normalized(&z), p),
                group: start,
                iterations: 0,
                trace: Vec::new(),
                budget_t: run.budget,
                warnings: Vec::new(),
            });
        }
    }
    // integral start: a p-capacity below 1/(n1⋯nd) certifies p ∉ Δ^B(z)
    let capacity_floor = z
        .is_gaussian_integer()
        .then(|| -(z.format().party_product() as f64).ln() - CAPACITY_SLACK);
    let nz = z.norm();
    let mut g = start;
    let mut first = g.factor(1).clone();
    first /= linalg::c(nz);
    g.set_factor(1, first);
    let mut y = z;
    y.scale_in_place(1.0 / nz);

    // ln|det| of the diagonal blocks of the accumulated element relative to
    // the start, blocked by the degeneracies of p
    let blocks: Vec<Vec<usize>> = (1..=d).map(|i| p.blocks(i)).collect();
    let weights: Vec<Vec<f64>> = (1..=d)
        .map(|i| {
            let inc = p.increasing(i);
            linalg::block_offsets(&blocks[i - 1]).windows(2).map(|w| inc[w[0]]).collect()
        })
        .collect();
    let mut log_dets: Vec<Vec<f64>> = blocks.iter().map(|b| vec![0.0; b.len()]).collect();
    for (k, &size) in blocks[0].iter().enumerate() {
        log_dets[0][k] -= size as f64 * nz.ln();
    }

    let mut trace = Vec::new();
    let mut iterations = 0u64;
    loop {
        let distances = marginal_distances(&y, p);
        let index = select_index(&distances);
        let norm = y.norm();
        let log_cap: f64 = norm.ln()
            - weights
                .iter()
                .zip(&log_dets)
                .flat_map(|(w, l)| w.iter().zip(l).map(|(a, b)| a * b))
                .sum::<f64>();
        if run.record_trace {
            trace.push(IterationRecord {
                index,
                distances: distances.clone(),
                norm,
                capacity: Some(log_cap.exp()),
            });
        }
        if distances[index - 1] <= run.epsilon {
            let fresh = g.apply(x)?;
            let fresh_distances = marginal_distances(&fresh, p);
            if fresh_distances.iter().all(|&e| e <= run.epsilon) && (fresh.norm() - 1.0).abs() <= 1e-8 {
                return Ok(ScalingReport {
                    verdict: Verdict::Scaled,
                    reason: format!("all marginals within {} after {iterations} steps", run.epsilon),
                    group: g,
                    iterations,
                    trace,
                    budget_t: run.budget,
                    final_distances: fresh_distances,
                    warnings: Vec::new(),
                });
            }
            // accumulated round-off; continue from the recomputed iterate
            let nf = fresh.norm();
            y = fresh;
            y.scale_in_place(1.0 / nf);
            let mut first = g.factor(1).clone();
            first /= linalg::c(nf);
            g.set_factor(1, first);
            for (k, &size) in blocks[0].iter().enumerate() {
                log_dets[0][k] -= size as f64 * nf.ln();
            }
            if distances_ok(&marginal_distances(&y, p), run.epsilon) {
                continue;
            }
        }
        if let Some(floor) = capacity_floor {
            if log_cap < floor {
                return Ok(ScalingReport {
                    verdict: Verdict::NotInPolytope,
                    reason: format!(
                        "capacity {:.6e} fell below the integral lower bound after {iterations} steps",
                        log_cap.exp()
                    ),
                    group: g,
                    iterations,
                    trace,
                    budget_t: run.budget,
                    final_distances: distances,
                    warnings: Vec::new(),
                });
            }
        }
        let diverged = g.factors().iter().any(|f| f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()));
        if iterations >= run.budget || diverged {
            let reason = if diverged {
                format!("accumulated group element overflowed after {iterations} steps")
            } else {
                format!("iteration budget {} exhausted", run.budget)
            };
            return Ok(ScalingReport {
                verdict: Verdict::BudgetExhausted,
                reason,
                group: g,
                iterations,
                trace,
                budget_t: run.budget,
                final_distances: distances,
                warnings: Vec::new(),
            });
        }
        let update = match step_update(&y, p, index, run.mode) {
            Ok(u) => u,
            Err(Error::Singular(msg)) => {
                let final_distances = marginal_distances(&y, p);
                return Ok(ScalingReport {
                    verdict: Verdict::NotInPolytope,
                    reason: format!("marginal {index} became numerically singular: {msg}"),
                    group: g,
                    iterations,
                    trace,
                    budget_t: run.budget,
                    final_distances,
                    warnings: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        };
        let mut next = y.apply_axis(index, &update)?;
        let nn = next.norm();
        if !(nn > 0.0) || !nn.is_finite() {
            bail!(Numeric, "iterate norm degenerated to {nn}");
        }
        next.scale_in_place(1.0 / nn);
        g.premultiply(index, &update);
        let mut first = g.factor(1).clone();
        first /= linalg::c(nn);
        g.set_factor(1, first);
        for (k, l) in cholesky::block_log_dets(&update, &blocks[index - 1]).into_iter().enumerate() {
            log_dets[index - 1][k] += l;
        }
        for (k, &size) in blocks[0].iter().enumerate() {
            log_dets[0][k] -= size as f64 * nn.ln();
        }
        iterations += 1;
        observer(&StepEvent {
            iteration: iterations,
            index,
            distances: &distances,
            before: &y,
            after: &next,
            update: &update,
        });
        y = next;
    }
}

fn distances_ok(distances: &[f64], eps: f64) -> bool {
    distances.iter().all(|&e| e <= eps)
}

fn normalized(t: &Tensor) -> Tensor {
    let n = t.norm();
    let mut out = t.clone();
    if n > 0.0 {
        out.scale_in_place(1.0 / n);
    }
    out
}
