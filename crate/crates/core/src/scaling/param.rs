//! Sampling tensors through homogeneous polynomial parametrizations.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{bail, Result};
use crate::group::GroupTuple;
use crate::linalg::{self, CMatrix};
use crate::spectrum::TargetSpectrum;
use crate::tensor::{Tensor, TensorFormat};

use super::random::{log2_big, random_big_below, randomization_bounds_with_degree, rng_for};
use super::{
    general_iteration_budget, scale_from, singular, spectrum_bit_size, RandRange, RunParams, ScalingConfig,
    ScalingReport, Verdict,
};

/// A homogeneous polynomial map `Φ: C^p → Ten(n0; n1, …, nd)`.
pub trait Parametrization: Sync {
    fn param_dim(&self) -> usize;
    fn degree(&self) -> u32;
    fn format(&self) -> TensorFormat;
    fn evaluate(&self, z: &[Complex64]) -> Result<Tensor>;
    /// Bit size of the coefficients of `Φ`.
    fn coeff_bits(&self) -> u32 {
        1
    }
    fn description(&self) -> String;
}

fn check_len(z: &[Complex64], expected: usize) -> Result<()> {
    if z.len() != expected {
        bail!(ShapeMismatch, "parametrization expects {expected} parameters, got {}", z.len());
    }
    Ok(())
}

/// `Φ(Z) = Z`, the whole tensor space.
#[derive(Debug, Clone)]
pub struct IdentityParam {
    format: TensorFormat,
}

impl IdentityParam {
    pub fn new(format: TensorFormat) -> Self {
        Self { format }
    }
}

impl Parametrization for IdentityParam {
    fn param_dim(&self) -> usize {
        self.format.total()
    }
    fn degree(&self) -> u32 {
        1
    }
    fn format(&self) -> TensorFormat {
        self.format.clone()
    }
    fn evaluate(&self, z: &[Complex64]) -> Result<Tensor> {
        check_len(z, self.param_dim())?;
        Tensor::new(self.format.clone(), z.to_vec())
    }
    fn description(&self) -> String {
        format!("identity on Ten({}; {:?})", self.format.n0(), self.format.dims())
    }
}

/// `Φ_X(A) = (A^(1) ⊗ ⋯ ⊗ A^(d)) X`. Parameters fill the factors in order,
/// each row-major, exactly like a random starting element is drawn.
#[derive(Debug, Clone)]
pub struct OrbitParam {
    x: Tensor,
}

impl OrbitParam {
    pub fn new(x: Tensor) -> Self {
        Self { x }
    }

    fn group_of(&self, z: &[Complex64]) -> Result<GroupTuple> {
        check_len(z, self.param_dim())?;
        let mut offset = 0;
        let factors = self
            .x
            .format()
            .dims()
            .iter()
            .map(|&n| {
                let m = CMatrix::from_fn(n, n, |i, j| z[offset + i * n + j]);
                offset += n * n;
                m
            })
            .collect();
        GroupTuple::new(factors)
    }
}

impl Parametrization for OrbitParam {
    fn param_dim(&self) -> usize {
        self.x.format().dims().iter().map(|n| n * n).sum()
    }
    fn degree(&self) -> u32 {
        self.x.format().d() as u32
    }
    fn format(&self) -> TensorFormat {
        self.x.format().clone()
    }
    fn evaluate(&self, z: &[Complex64]) -> Result<Tensor> {
        self.group_of(z)?.apply(&self.x)
    }
    fn coeff_bits(&self) -> u32 {
        self.x.bit_size()
    }
    fn description(&self) -> String {
        format!("orbit map of a tensor in Ten({}; {:?})", self.x.format().n0(), self.x.format().dims())
    }
}

/// Translation-invariant matrix product states with `sites` sites,
/// physical dimension `physical` and bond dimension `bond`.
#[derive(Debug, Clone)]
pub struct MpsParam {
    pub sites: usize,
    pub physical: usize,
    pub bond: usize,
}

impl MpsParam {
    pub fn new(sites: usize, physical: usize, bond: usize) -> Result<Self> {
        if sites < 2 || physical == 0 || bond == 0 {
            bail!(InvalidArgument, "MPS needs at least 2 sites and positive dimensions");
        }
        Ok(Self { sites, physical, bond })
    }

    /// Splits a parameter vector into the site matrices `M_1, …, M_n`.
    pub fn matrices(&self, z: &[Complex64]) -> Result<Vec<CMatrix>> {
        check_len(z, self.param_dim())?;
        let b = self.bond;
        Ok((0..self.physical)
            .map(|j| CMatrix::from_fn(b, b, |r, c| z[j * b * b + r * b + c]))
            .collect())
    }
}

impl Parametrization for MpsParam {
    fn param_dim(&self) -> usize {
        self.physical * self.bond * self.bond
    }
    fn degree(&self) -> u32 {
        self.sites as u32
    }
    fn format(&self) -> TensorFormat {
        TensorFormat::new(1, vec![self.physical; self.sites]).expect("validated dims")
    }
    fn evaluate(&self, z: &[Complex64]) -> Result<Tensor> {
        mps_tensor(&self.matrices(z)?, self.sites)
    }
    fn description(&self) -> String {
        format!("MPS with {} sites, physical dimension {}, bond dimension {}", self.sites, self.physical, self.bond)
    }
}

/// `X_{j1…jd} = tr[M_{j1} ⋯ M_{jd}]` in `Ten(1; n, …, n)`.
pub fn mps_tensor(matrices: &[CMatrix], d: usize) -> Result<Tensor> {
    if matrices.is_empty() {
        bail!(InvalidArgument, "MPS needs at least one site matrix");
    }
    if d < 2 {
        bail!(InvalidArgument, "MPS needs at least 2 sites, got {d}");
    }
    let b = matrices[0].nrows();
    if b == 0 || matrices.iter().any(|m| m.nrows() != b || m.ncols() != b) {
        bail!(ShapeMismatch, "MPS matrices must all be square of the same positive size");
    }
    let n = matrices.len();
    let format = TensorFormat::new(1, vec![n; d])?;
    Ok(Tensor::from_fn(format, |idx| {
        let mut prod = matrices[idx[1]].clone();
        for &j in &idx[2..] {
            prod *= &matrices[j];
        }
        linalg::trace(&prod)
    }))
}

fn sample_params(dim: usize, cfg: &ScalingConfig, degree: u32, p: &TargetSpectrum, rng: &mut impl Rng) -> Vec<Complex64> {
    match cfg.rand_range {
        RandRange::Practical(r) => (0..dim).map(|_| linalg::c(rng.random_range(1..=r) as f64)).collect(),
        RandRange::Disabled => vec![linalg::ONE; dim],
        RandRange::Theoretical => {
            let dims = p.dims();
            let (_, m) = randomization_bounds_with_degree(p.lcm() as u64, dims.len(), &dims, degree as u64);
            let shift = m.bits().saturating_sub(60);
            (0..dim)
                .map(|_| {
                    let v = random_big_below(&m, rng) >> shift;
                    linalg::c(num_traits::ToPrimitive::to_f64(&v).unwrap_or(0.0))
                })
                .collect()
        }
    }
}

fn log2_range(cfg: &ScalingConfig, degree: u32, p: &TargetSpectrum) -> f64 {
    match cfg.rand_range {
        RandRange::Practical(r) => (r as f64).log2(),
        RandRange::Disabled => 0.0,
        RandRange::Theoretical => {
            let dims = p.dims();
            let (_, m) = randomization_bounds_with_degree(p.lcm() as u64, dims.len(), &dims, degree as u64);
            log2_big(&m)
        }
    }
}

/// Samples `X = Φ(Z)` with random integer parameters and scales it from
/// `g = (I/‖X‖, I, …, I)`. Returns the report and the sampled tensor.
pub fn run_general_scaling(
    phi: &dyn Parametrization,
    p: &TargetSpectrum,
    cfg: &ScalingConfig,
) -> Result<(ScalingReport, Tensor)> {
    cfg.validate()?;
    let format = phi.format();
    if p.dims() != format.dims() {
        bail!(ShapeMismatch, "target dims {:?} do not match parametrization dims {:?}", p.dims(), format.dims());
    }
    let mut rng = rng_for(cfg.seed);
    let mut warnings = Vec::new();
    let mut x = phi.evaluate(&sample_params(phi.param_dim(), cfg, phi.degree(), p, &mut rng))?;
    if x.is_zero() {
        warnings.push("sampled parameters gave the zero tensor; resampled once".to_string());
        x = phi.evaluate(&sample_params(phi.param_dim(), cfg, phi.degree(), p, &mut rng))?;
    }
    let bits = phi.coeff_bits().max(spectrum_bit_size(p));
    let budget = cfg.max_iters.unwrap_or_else(|| {
        general_iteration_budget(
            &format.axes(),
            bits,
            cfg.epsilon,
            phi.degree(),
            phi.param_dim(),
            log2_range(cfg, phi.degree(), p),
        )
    });
    if x.is_zero() {
        warnings.push("sampled parameters gave the zero tensor twice".to_string());
        let report = ScalingReport {
            verdict: Verdict::NotInPolytope,
            reason: "parametrization vanished on both samples".to_string(),
            group: GroupTuple::identity(format.dims()),
            iterations: 0,
            trace: Vec::new(),
            budget_t: budget,
            final_distances: Vec::new(),
            warnings,
        };
        return Ok((report, x));
    }
    let run = RunParams { epsilon: cfg.epsilon, mode: cfg.mode, budget, record_trace: cfg.record_trace };
    let start = GroupTuple::identity(format.dims());
    let mut report = if p.has_zeros() {
        singular::scale_singular(&x, p, &run, start, &mut |_| {})?
    } else {
        scale_from(&x, p, &run, start, &mut |_| {})?
    };
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok((report, x))
}
