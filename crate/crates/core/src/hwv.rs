//! Highest weight vectors, characters, capacity and the KL/Pinsker
//! quantities that certify the potential-function behaviour of a run.
//!
//! A highest weight vector of degree `k` is specified by a weight
//! `λ = (λ^(1), …, λ^(d))` with `|λ^(i)| = k`, an index sequence
//! `i_1, …, i_k` into the distinguished factor and one permutation of
//! `{0, …, k−1}` per party:
//!
//! `P(X) = (ε_{i_1…i_k} ⊗ Det_{(λ^(1))*, π^(1)} ⊗ ⋯ ⊗ Det_{(λ^(d))*, π^(d)})(X^{⊗k})`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::group::GroupTuple;
use crate::hermitian::{trace_distance, HermitianMatrix};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::partition::Partition;
use crate::spectrum::TargetSpectrum;
use crate::tensor::{Tensor, TensorFormat};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HwvSpec {
    pub weight: Vec<Partition>,
    pub index_seq: Vec<usize>,
    /// One-line notation, 0-based.
    pub perms: Vec<Vec<usize>>,
}

impl HwvSpec {
    pub fn new(weight: Vec<Partition>, index_seq: Vec<usize>, perms: Vec<Vec<usize>>) -> Result<Self> {
        if weight.is_empty() {
            bail!(InvalidArgument, "a highest weight vector needs at least one party");
        }
        let k = index_seq.len();
        for (i, w) in weight.iter().enumerate() {
            if w.size() != k {
                bail!(InvalidArgument, "weight {} has size {}, degree is {k}", i + 1, w.size());
            }
        }
        if perms.len() != weight.len() {
            bail!(InvalidArgument, "{} permutations for {} parties", perms.len(), weight.len());
        }
        for (i, perm) in perms.iter().enumerate() {
            if !is_permutation(perm, k) {
                bail!(InvalidArgument, "entry {} of perms is not a permutation of 0..{k}", i + 1);
            }
        }
        Ok(Self { weight, index_seq, perms })
    }

    pub fn degree(&self) -> usize {
        self.index_seq.len()
    }

    pub fn d(&self) -> usize {
        self.weight.len()
    }

    pub fn validate_for(&self, format: &TensorFormat) -> Result<()> {
        if format.d() != self.d() {
            bail!(ShapeMismatch, "spec has {} parties, tensor has {}", self.d(), format.d());
        }
        if let Some(&i) = self.index_seq.iter().find(|&&i| i >= format.n0()) {
            bail!(InvalidArgument, "index {i} out of range for n0 = {}", format.n0());
        }
        for (k, (w, &n)) in self.weight.iter().zip(format.dims()).enumerate() {
            if w.len() > n {
                bail!(InvalidArgument, "weight {} has more than n = {n} parts", k + 1);
            }
        }
        Ok(())
    }
}

fn is_permutation(perm: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    perm.len() == k
        && perm.iter().all(|&v| {
            if v >= k || seen[v] {
                false
            } else {
                seen[v] = true;
                true
            }
        })
}

/// Limits for evaluation; defaults are `k ≤ 6` and `n1⋯nd ≤ 16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalBudget {
    pub max_degree: usize,
    pub max_party_product: usize,
}

impl Default for EvalBudget {
    fn default() -> Self {
        Self { max_degree: 6, max_party_product: 16 }
    }
}

impl EvalBudget {
    fn check(&self, k: usize, format: &TensorFormat) -> Result<()> {
        if k > self.max_degree || format.party_product() > self.max_party_product {
            bail!(
                BudgetExceeded,
                "degree {k} with n1⋯nd = {} exceeds the budget (k ≤ {}, n1⋯nd ≤ {})",
                format.party_product(),
                self.max_degree,
                self.max_party_product
            );
        }
        Ok(())
    }
}

/// `Det_ℓ(v_1 ⊗ ⋯ ⊗ v_ℓ) = det[(v_i)_{n+1−j}]`, the bottom `ℓ × ℓ` block.
pub fn det_l(vectors: &[Vec<Complex64>]) -> Result<Complex64> {
    let l = vectors.len();
    if l == 0 {
        return Ok(ONE);
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        bail!(ShapeMismatch, "vectors have different lengths");
    }
    if l > n {
        bail!(InvalidArgument, "cannot take Det_{l} of vectors in C^{n}");
    }
    let m = DMatrix::from_fn(l, l, |i, j| vectors[i][n - 1 - j]);
    Ok(m.determinant())
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    // lexicographic order
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn sign_of(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// The index maps `J: [k] → [n]` on which `Det_{λ*, π}(⊗ e_{J(α)})` is
/// nonzero, with its value `±1`.
fn party_terms(lambda: &Partition, perm: &[usize], n: usize) -> Vec<(Vec<usize>, f64)> {
    let k = perm.len();
    let columns = lambda.conjugate();
    let mut terms = vec![(vec![usize::MAX; k], 1.0)];
    let mut offset = 0;
    for &h in columns.parts() {
        if h > n {
            return Vec::new();
        }
        let sigmas = permutations(h);
        let mut next = Vec::with_capacity(terms.len() * sigmas.len());
        for (j, s) in &terms {
            for sigma in &sigmas {
                let mut j2 = j.clone();
                for t in 0..h {
                    j2[perm[offset + t]] = n - 1 - sigma[t];
                }
                next.push((j2, s * sign_of(sigma)));
            }
        }
        terms = next;
        offset += h;
    }
    terms
}

/// A spec compiled against a tensor format: for every party, the nonzero
/// index maps as flat offsets per slot, with their signs.
#[derive(Debug, Clone)]
pub struct PreparedHwv {
    format: TensorFormat,
    degree: usize,
    base: Vec<usize>,
    parties: Vec<Vec<(Vec<usize>, f64)>>,
}

impl PreparedHwv {
    pub fn new(spec: &HwvSpec, format: &TensorFormat, budget: &EvalBudget) -> Result<Self> {
        spec.validate_for(format)?;
        let k = spec.degree();
        budget.check(k, format)?;
        let strides = format.strides();
        let parties = spec
            .weight
            .iter()
            .zip(&spec.perms)
            .zip(format.dims())
            .enumerate()
            .map(|(i, ((w, p), &n))| {
                party_terms(w, p, n)
                    .into_iter()
                    .map(|(j, sign)| (j.iter().map(|&a| a * strides[i + 1]).collect(), sign))
                    .collect()
            })
            .collect();
        let base = spec.index_seq.iter().map(|&i| i * strides[0]).collect();
        Ok(Self { format: format.clone(), degree: k, base, parties })
    }

    /// `true` when some party admits no nonzero index map, so `P ≡ 0`.
    pub fn is_identically_zero(&self) -> bool {
        self.parties.iter().any(Vec::is_empty)
    }

    pub fn eval(&self, x: &Tensor) -> Result<Complex64> {
        if x.format() != &self.format {
            bail!(ShapeMismatch, "prepared for {:?}, got {:?}", self.format, x.format());
        }
        if self.is_identically_zero() {
            return Ok(ZERO);
        }
        let mut offsets = self.base.clone();
        Ok(self.accumulate(x.entries(), 0, &mut offsets, 1.0))
    }

    fn accumulate(&self, entries: &[Complex64], party: usize, offsets: &mut [usize], sign: f64) -> Complex64 {
        if party == self.parties.len() {
            let mut term = linalg::c(sign);
            for &o in offsets.iter() {
                term *= entries[o];
            }
            return term;
        }
        let mut total = ZERO;
        for (contrib, s) in &self.parties[party] {
            for (o, c) in offsets.iter_mut().zip(contrib) {
                *o += c;
            }
            total += self.accumulate(entries, party + 1, offsets, sign * s);
            for (o, c) in offsets.iter_mut().zip(contrib) {
                *o -= c;
            }
        }
        total
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

/// Evaluates `P(X)` by summing over the index maps where every
/// determinant factor is nonzero.
pub fn eval_hwv(spec: &HwvSpec, x: &Tensor, budget: &EvalBudget) -> Result<Complex64> {
    PreparedHwv::new(spec, x.format(), budget)?.eval(x)
}

/// Reference evaluation: the plain sum over all `(n1⋯nd)^k` index maps,
/// with every determinant factor computed by [`det_l`] on basis vectors.
pub fn eval_hwv_naive(spec: &HwvSpec, x: &Tensor) -> Result<Complex64> {
    let format = x.format();
    spec.validate_for(format)?;
    let k = spec.degree();
    let dims = format.dims();
    let basis = |n: usize, a: usize| -> Vec<Complex64> { (0..n).map(|r| if r == a { ONE } else { ZERO }).collect() };
    let det_form = |party: usize, j: &[usize]| -> Result<Complex64> {
        let n = dims[party];
        let perm = &spec.perms[party];
        let mut value = ONE;
        let mut offset = 0;
        for &h in spec.weight[party].conjugate().parts() {
            let vecs: Vec<Vec<Complex64>> = (0..h).map(|t| basis(n, j[perm[offset + t]])).collect();
            if h > n {
                return Ok(ZERO);
            }
            value *= det_l(&vecs)?;
            offset += h;
        }
        Ok(value)
    };
    let party_count: Vec<usize> = dims.iter().map(|&n| n.pow(k as u32)).collect();
    let total_maps: usize = party_count.iter().product();
    let mut total = ZERO;
    for code in 0..total_maps {
        let mut rest = code;
        let mut maps = Vec::with_capacity(dims.len());
        for &n in dims {
            let mut j = vec![0; k];
            for slot in j.iter_mut() {
                *slot = rest % n;
                rest /= n;
            }
            maps.push(j);
        }
        let mut coef = ONE;
        for (party, j) in maps.iter().enumerate() {
            coef *= det_form(party, j)?;
            if coef == ZERO {
                break;
            }
        }
        if coef == ZERO {
            continue;
        }
        let mut prod = coef;
        for alpha in 0..k {
            let mut idx = vec![spec.index_seq[alpha]];
            idx.extend(maps.iter().map(|j| j[alpha]));
            prod *= x.get(&idx)?;
        }
        total += prod;
    }
    Ok(total)
}

/// `(n1⋯nd)^k ‖X‖^k`.
pub fn evaluation_bound(x: &Tensor, k: usize) -> f64 {
    (x.format().party_product() as f64 * x.norm()).powi(k as i32)
}

/// `χ_λ(R) = Π_i Π_j (R^(i)_{jj})^{λ^(i)_j}` for triangular factors.
pub fn chi(weights: &[Vec<i64>], r: &GroupTuple) -> Result<Complex64> {
    check_weights(weights, r)?;
    let mut value = ONE;
    for (w, f) in weights.iter().zip(r.factors()) {
        for (j, &e) in w.iter().enumerate() {
            value *= int_power(f[(j, j)], e)?;
        }
    }
    Ok(value)
}

/// Block form `Π_i Π_b det(R^(i)_{[b]})^{λ^(i)_{[b]}}` for block-triangular factors.
pub fn chi_blocks(weights: &[Vec<i64>], blocks: &[Vec<usize>], r: &GroupTuple) -> Result<Complex64> {
    if weights.len() != r.d() || blocks.len() != r.d() {
        bail!(ShapeMismatch, "weights, blocks and group disagree on the number of parties");
    }
    let mut value = ONE;
    for ((w, b), f) in weights.iter().zip(blocks).zip(r.factors()) {
        if w.len() != b.len() || b.iter().sum::<usize>() != f.nrows() {
            bail!(ShapeMismatch, "block structure {b:?} does not fit weights {w:?}");
        }
        let offsets = linalg::block_offsets(b);
        for (k, &e) in w.iter().enumerate() {
            let size = b[k];
            let det = f.view((offsets[k], offsets[k]), (size, size)).into_owned().determinant();
            value *= int_power(det, e)?;
        }
    }
    Ok(value)
}

fn check_weights(weights: &[Vec<i64>], r: &GroupTuple) -> Result<()> {
    if weights.len() != r.d() {
        bail!(ShapeMismatch, "{} weights for {} factors", weights.len(), r.d());
    }
    for (w, f) in weights.iter().zip(r.factors()) {
        if w.len() != f.nrows() {
            bail!(ShapeMismatch, "weight of length {} for a {}x{} factor", w.len(), f.nrows(), f.nrows());
        }
    }
    Ok(())
}

fn int_power(z: Complex64, e: i64) -> Result<Complex64> {
    if e < 0 && z == ZERO {
        bail!(Domain, "zero diagonal entry raised to a negative power");
    }
    Ok(if e >= 0 { z.powu(e as u32) } else { ONE / z.powu((-e) as u32) })
}

/// Exponents of `P(R·X) = Π_j (R_jj)^{λ_{n+1−j}} P(X)`.
fn transform_exponents(spec: &HwvSpec, dims: &[usize]) -> Result<Vec<Vec<i64>>> {
    spec.weight
        .iter()
        .zip(dims)
        .map(|(w, &n)| Ok(w.padded(n)?.into_iter().rev().map(|v| v as i64).collect()))
        .collect()
}

/// Relative residual of `P(R·X) = χ_{λ*}(R^{-1}) P(X)` for triangular `R`.
/// The scale is floored at `10^{-6}` of the evaluation bound of `R·X` so
/// vanishing values compare against round-off, not zero.
pub fn transform_residual(spec: &HwvSpec, x: &Tensor, r: &GroupTuple, budget: &EvalBudget) -> Result<f64> {
    let rx = r.apply(x)?;
    let lhs = eval_hwv(spec, &rx, budget)?;
    let factor = chi(&transform_exponents(spec, x.format().dims())?, r)?;
    let rhs = factor * eval_hwv(spec, x, budget)?;
    let scale = lhs.norm().max(rhs.norm()).max(1e-6 * evaluation_bound(&rx, spec.degree()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

/// Checks the transformation law within `1e-8` relative error.
pub fn hwv_transform_check(spec: &HwvSpec, x: &Tensor, r: &GroupTuple, budget: &EvalBudget) -> Result<bool> {
    Ok(transform_residual(spec, x, r, budget)? <= 1e-8)
}

/// `‖R·X‖·|χ_{p*}(R)| = ‖R·X‖·Π_i Π_j |R^(i)_jj|^{−(p_↑^(i))_j}`.
pub fn capacity_value(x: &Tensor, p: &TargetSpectrum, r: &GroupTuple) -> Result<f64> {
    let blocks: Vec<Vec<usize>> = p.dims().iter().map(|&n| vec![1; n]).collect();
    capacity_with_blocks(x, p, r, &blocks)
}

/// Parabolic form of [`capacity_value`], using block determinants over
/// the runs of equal target entries.
pub fn capacity_value_blocks(x: &Tensor, p: &TargetSpectrum, r: &GroupTuple) -> Result<f64> {
    let blocks: Vec<Vec<usize>> = (1..=p.d()).map(|i| p.blocks(i)).collect();
    capacity_with_blocks(x, p, r, &blocks)
}

fn capacity_with_blocks(x: &Tensor, p: &TargetSpectrum, r: &GroupTuple, blocks: &[Vec<usize>]) -> Result<f64> {
    if p.dims() != r.dims() {
        bail!(ShapeMismatch, "targets {:?} and group {:?} disagree", p.dims(), r.dims());
    }
    let mut log = r.apply(x)?.norm().ln();
    for (i, (f, b)) in r.factors().iter().zip(blocks).enumerate() {
        let inc = p.increasing(i + 1);
        let offsets = linalg::block_offsets(b);
        for (k, w) in offsets.windows(2).enumerate() {
            let size = b[k];
            let det = f.view((w[0], w[0]), (size, size)).into_owned().determinant().norm();
            let exponent = inc[w[0]];
            if exponent == 0.0 {
                continue;
            }
            if det == 0.0 {
                bail!(Domain, "singular diagonal block in capacity evaluation");
            }
            log -= exponent * det.ln();
        }
    }
    Ok(log.exp())
}

/// `D_KL(p‖q) = Σ p_j log2(p_j / q_j)` in bits, with `0·log 0 = 0` and `+∞`
/// when some `q_j = 0 < p_j`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).log2()
            }
        })
        .sum()
}

/// Both sides of `D_KL(p‖q) ≥ ‖diag(p) − ρ‖_tr² / (16 ln 2)` where
/// `q_j = |R_jj|²` and `ρ = R R†`.
pub fn pinsker_gap(p: &[f64], rho: &HermitianMatrix, r: &CMatrix) -> Result<(f64, f64)> {
    if p.len() != rho.n() || r.nrows() != rho.n() || r.ncols() != rho.n() {
        bail!(ShapeMismatch, "dimensions of p, ρ and R disagree");
    }
    let q: Vec<f64> = (0..rho.n()).map(|j| r[(j, j)].norm_sqr()).collect();
    let lhs = kl_divergence(p, &q);
    let dist = trace_distance(&HermitianMatrix::from_real_diag(p), rho)?;
    Ok((lhs, dist * dist / (16.0 * std::f64::consts::LN_2)))
}

/// Multiplicative slack allowed in [`verify_progress`].
pub const PROGRESS_SLACK: f64 = 1e-6;

/// `|P(Y')| ≥ 2^{k ε_i² / (32 ln 2)} |P(Y)|` up to [`PROGRESS_SLACK`].
pub fn verify_progress(spec: &HwvSpec, y: &Tensor, y_next: &Tensor, eps_i: f64, budget: &EvalBudget) -> Result<bool> {
    let before = eval_hwv(spec, y, budget)?.norm();
    let after = eval_hwv(spec, y_next, budget)?.norm();
    let k = spec.degree() as f64;
    let gain = 2f64.powf(k * eps_i * eps_i / (32.0 * std::f64::consts::LN_2));
    Ok(after >= gain * before * (1.0 - PROGRESS_SLACK))
}

/// The weight `k·p` when it is integral.
pub fn weight_for(p: &TargetSpectrum, k: usize) -> Option<Vec<Partition>> {
    p.parts()
        .iter()
        .map(|part| {
            let parts: Option<Vec<usize>> = part
                .iter()
                .map(|q| {
                    let v = *q * crate::spectrum::Rational::from_integer(k as i64);
                    v.is_integer().then(|| v.to_integer() as usize)
                })
                .collect();
            parts.and_then(|v| Partition::new(v).ok())
        })
        .collect()
}

/// Every weight `(λ^(1), …, λ^(d))` of degree `k` with `λ^(i)` having at
/// most `n_i` parts.
pub fn all_weights(dims: &[usize], k: usize) -> Vec<Vec<Partition>> {
    let mut out = vec![Vec::new()];
    for &n in dims {
        let choices = Partition::all_of(k, n);
        out = out
            .into_iter()
            .flat_map(|w: Vec<Partition>| {
                choices.iter().map(move |c| {
                    let mut next = w.clone();
                    next.push(c.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// Number of `(index sequence, permutation tuple)` candidates for degree `k`.
pub fn candidate_count(format: &TensorFormat, k: usize) -> usize {
    let fact: usize = (1..=k).product();
    format.n0().pow(k as u32).saturating_mul(fact.saturating_pow(format.d() as u32))
}

/// The `code`-th candidate in lexicographic order of
/// `(index_seq, π^(1), …, π^(d))`.
pub fn candidate_spec(format: &TensorFormat, weight: &[Partition], code: usize) -> HwvSpec {
    let k = weight.first().map(Partition::size).unwrap_or(0);
    let perms = permutations(k);
    decode_candidate(format, weight, &perms, code)
}

fn decode_candidate(format: &TensorFormat, weight: &[Partition], perms: &[Vec<usize>], code: usize) -> HwvSpec {
    let k = weight.first().map(Partition::size).unwrap_or(0);
    let n0 = format.n0();
    let mut rest = code;
    let mut chosen = Vec::with_capacity(format.d());
    for _ in 0..format.d() {
        chosen.push(perms[rest % perms.len()].clone());
        rest /= perms.len();
    }
    chosen.reverse();
    let mut seq = vec![0; k];
    for slot in seq.iter_mut().rev() {
        *slot = rest % n0;
        rest /= n0;
    }
    HwvSpec { weight: weight.to_vec(), index_seq: seq, perms: chosen }
}

/// Upper limit on candidates examined by [`search_nonvanishing_spec`].
pub const MAX_SEARCH_CANDIDATES: usize = 50_000_000;

/// Finds the lexicographically first `(index_seq, π^(1), …, π^(d))` with
/// `|P(X)| > 10^{-9}·(n1⋯nd)^k‖X‖^k`, or `None` if every candidate vanishes.
pub fn search_nonvanishing_spec(x: &Tensor, weight: &[Partition], budget: &EvalBudget) -> Result<Option<HwvSpec>> {
    let format = x.format();
    let k = weight.first().map(Partition::size).unwrap_or(0);
    if weight.len() != format.d() || weight.iter().any(|w| w.size() != k) {
        bail!(InvalidArgument, "weights must cover every party with one common size");
    }
    budget.check(k, format)?;
    let perms = permutations(k);
    let total = candidate_count(format, k);
    if total > MAX_SEARCH_CANDIDATES {
        bail!(BudgetExceeded, "{total} candidate specs exceed the search limit");
    }
    let threshold = 1e-9 * evaluation_bound(x, k);
    let decode = |code: usize| decode_candidate(format, weight, &perms, code);
    let found = (0..total).into_par_iter().find_first(|&code| {
        let spec = decode(code);
        PreparedHwv::new(&spec, format, budget)
            .and_then(|p| p.eval(x))
            .map(|v| v.norm() > threshold)
            .unwrap_or(false)
    });
    Ok(found.map(decode))
}
