//! Rational target spectra `p = (p^(1), …, p^(d))`.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{bail, Result};

pub type Rational = Ratio<i64>;

/// Default denominator cap when turning decimals into fractions.
pub const DEFAULT_DENOMINATOR_CAP: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TargetSpectrum {
    parts: Vec<Vec<Rational>>,
    lcm: i64,
}

impl TargetSpectrum {
    /// Validates that every part is a nonincreasing probability vector.
    pub fn new(parts: Vec<Vec<Rational>>) -> Result<Self> {
        if parts.is_empty() {
            bail!(InvalidArgument, "a target spectrum needs at least one part");
        }
        let mut lcm = 1i64;
        for (k, part) in parts.iter().enumerate() {
            if part.is_empty() {
                bail!(InvalidArgument, "part {} is empty", k + 1);
            }
            for w in part.windows(2) {
                if w[0] < w[1] {
                    bail!(InvalidArgument, "part {} is not nonincreasing: {} < {}", k + 1, w[0], w[1]);
                }
            }
            if part.iter().any(|q| q.is_negative() || *q > Rational::one()) {
                bail!(InvalidArgument, "part {} has entries outside [0, 1]", k + 1);
            }
            let sum: Rational = part.iter().copied().sum();
            if sum != Rational::one() {
                bail!(InvalidArgument, "part {} sums to {sum}, not 1", k + 1);
            }
            for q in part {
                lcm = lcm.lcm(q.denom());
            }
        }
        Ok(Self { parts, lcm })
    }

    /// Uniform spectra `(1/n_i, …, 1/n_i)`.
    pub fn uniform(dims: &[usize]) -> Self {
        let parts = dims
            .iter()
            .map(|&n| vec![Rational::new(1, n as i64); n])
            .collect();
        Self::new(parts).expect("uniform spectra are valid")
    }

    /// Builds spectra from floating values via continued fractions.
    pub fn from_f64(parts: &[Vec<f64>], cap: i64) -> Result<Self> {
        let rational = parts
            .iter()
            .map(|p| rationalize(p, cap))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rational)
    }

    pub fn parts(&self) -> &[Vec<Rational>] {
        &self.parts
    }

    pub fn d(&self) -> usize {
        self.parts.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    /// Least common multiple `ℓ` of all denominators.
    pub fn lcm(&self) -> i64 {
        self.lcm
    }

    /// Part for party `i ∈ 1..=d`, nonincreasing.
    pub fn part(&self, i: usize) -> &[Rational] {
        &self.parts[i - 1]
    }

    /// `p_↑^(i)` as exact rationals (increasing order).
    pub fn increasing_exact(&self, i: usize) -> Vec<Rational> {
        self.parts[i - 1].iter().rev().copied().collect()
    }

    /// `p_↑^(i)` as doubles.
    pub fn increasing(&self, i: usize) -> Vec<f64> {
        self.increasing_exact(i).iter().map(to_f64).collect()
    }

    /// Sizes of runs of equal entries in `p_↑^(i)`, compared exactly.
    pub fn blocks(&self, i: usize) -> Vec<usize> {
        let inc = self.increasing_exact(i);
        let mut blocks = Vec::new();
        let mut run = 1;
        for w in inc.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                blocks.push(run);
                run = 1;
            }
        }
        blocks.push(run);
        blocks
    }

    pub fn is_uniform(&self) -> bool {
        self.parts.iter().all(|p| p.iter().all(|q| *q == p[0]))
    }

    pub fn has_zeros(&self) -> bool {
        self.parts.iter().any(|p| p.iter().any(Zero::is_zero))
    }

    /// Number of nonzero entries per party.
    pub fn ranks(&self) -> Vec<usize> {
        self.parts
            .iter()
            .map(|p| p.iter().filter(|q| !q.is_zero()).count())
            .collect()
    }

    /// Drops zero entries from every part.
    pub fn positive_part(&self) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| p.iter().filter(|q| !q.is_zero()).copied().collect())
            .collect();
        Self::new(parts).expect("dropping zeros keeps a valid spectrum")
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.parts.iter().map(|p| p.iter().map(to_f64).collect()).collect()
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"a/b"` or an integer string into a reduced fraction.
pub fn parse_fraction(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| crate::error::Error::Parse(format!("bad numerator in {s:?}")))?;
    let den: i64 = den
        .parse()
        .map_err(|_| crate::error::Error::Parse(format!("bad denominator in {s:?}")))?;
    if den <= 0 {
        bail!(Parse, "denominator must be positive in {s:?}");
    }
    Ok(Rational::new(num, den))
}

/// Best rational approximation with denominator at most `cap`.
pub fn approximate(x: f64, cap: i64) -> Result<Rational> {
    if !x.is_finite() {
        bail!(InvalidArgument, "cannot rationalize {x}");
    }
    let sign = if x < 0.0 { -1 } else { 1 };
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    for _ in 0..64 {
        let a = v.floor();
        if a > i64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a.saturating_mul(p1).saturating_add(p0), a.saturating_mul(q1).saturating_add(q0));
        if q2 > cap {
            // semiconvergent bound: largest admissible partial quotient
            let t = (cap - q0) / q1.max(1);
            if t > 0 && 2 * t >= a {
                let (ps, qs) = (t * p1 + p0, t * q1 + q0);
                let cand = Rational::new(ps, qs);
                let conv = Rational::new(p1, q1.max(1));
                let err = |r: &Rational| (to_f64(r) - x.abs()).abs();
                if q1 == 0 || err(&cand) < err(&conv) {
                    return Ok(cand * sign);
                }
            }
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        bail!(InvalidArgument, "cannot rationalize {x} with denominator cap {cap}");
    }
    Ok(Rational::new(p1, q1) * sign)
}

/// Rationalizes a probability vector through its cumulative sums so that
/// the result sums to exactly one.
pub fn rationalize(values: &[f64], cap: i64) -> Result<Vec<Rational>> {
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        bail!(InvalidArgument, "probability vector must have positive sum");
    }
    let mut out = Vec::with_capacity(values.len());
    let mut prev = Rational::zero();
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        acc += v;
        let cum = if k + 1 == values.len() {
            Rational::one()
        } else {
            approximate(acc / total, cap)?
        };
        out.push(cum - prev);
        prev = cum;
    }
    Ok(out)
}
