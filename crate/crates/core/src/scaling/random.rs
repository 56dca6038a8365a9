//! Randomization bounds and random integer starting points.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::GroupTuple;
use crate::linalg::CMatrix;

/// `K = (ℓ·d·max n)^(d·max n²)` and `M = 2·degree·K`, exactly.
pub fn randomization_bounds_with_degree(ell: u64, d: usize, dims: &[usize], degree: u64) -> (BigUint, BigUint) {
    let max_n = dims.iter().copied().max().unwrap_or(1) as u64;
    let base = BigUint::from(ell) * BigUint::from(d as u64) * BigUint::from(max_n);
    let exp = (d as u64 * max_n * max_n) as u32;
    let k = num_traits::pow::pow(base, exp as usize);
    let m = &k * BigUint::from(2 * degree);
    (k, m)
}

/// Bounds for the orbit setting, where the randomizing polynomial has degree `d`.
pub fn randomization_bounds(ell: u64, d: usize, dims: &[usize]) -> (BigUint, BigUint) {
    randomization_bounds_with_degree(ell, d, dims, d as u64)
}

/// `log2` of a big integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return x.to_u64().map(|v| (v as f64).log2()).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrices with entries drawn uniformly from `{1, …, range}`.
pub fn random_group(dims: &[usize], range: u64, seed: u64) -> GroupTuple {
    let mut rng = rng_for(seed);
    random_group_from(dims, range, &mut rng)
}

pub(crate) fn random_group_from(dims: &[usize], range: u64, rng: &mut impl Rng) -> GroupTuple {
    let range = range.max(1);
    let factors = dims
        .iter()
        .map(|&n| {
            let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(1..=range) as f64).collect();
            CMatrix::from_fn(n, n, |i, j| crate::linalg::c(entries[i * n + j]))
        })
        .collect();
    GroupTuple::new(factors).expect("dims are nonempty")
}

/// Uniform draw from `{1, …, m}` by rejection on the bit length of `m`.
pub fn random_big_below(m: &BigUint, rng: &mut impl RngCore) -> BigUint {
    let bits = m.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = (bytes as u64 * 8 - bits) as u32;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        if let Some(top) = buf.last_mut() {
            *top &= 0xffu8 >> excess;
        }
        let candidate = BigUint::from_bytes_le(&buf);
        if &candidate < m {
            return candidate + BigUint::one();
        }
    }
}

/// Entries drawn uniformly from `{1, …, m}` for an arbitrary-precision `m`.
///
/// All entries share one power-of-two rescaling so they fit in a double; a
/// common scalar per factor does not affect scaling, only the low-order bits
/// of very large draws are lost.
pub fn random_group_big(dims: &[usize], m: &BigUint, seed: u64) -> GroupTuple {
    let mut rng = rng_for(seed);
    let shift = m.bits().saturating_sub(60);
    let factors = dims
        .iter()
        .map(|&n| {
            let entries: Vec<f64> = (0..n * n)
                .map(|_| (random_big_below(m, &mut rng) >> shift).to_f64().unwrap_or(0.0))
                .collect();
            CMatrix::from_fn(n, n, |i, j| crate::linalg::c(entries[i * n + j]))
        })
        .collect();
    GroupTuple::new(factors).expect("dims are nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let (k, m) = randomization_bounds(1, 1, &[2]);
        assert_eq!(k, BigUint::from(16u32));
        assert_eq!(m, BigUint::from(32u32));
        let (k, m) = randomization_bounds(2, 2, &[2, 2]);
        assert_eq!(k, BigUint::from(16_777_216u64));
        assert_eq!(m, BigUint::from(67_108_864u64));
        let (k, m) = randomization_bounds(1, 1, &[1]);
        assert_eq!(k, BigUint::from(1u32));
        assert_eq!(m, BigUint::from(2u32));
    }

    #[test]
    fn log2_of_big_values() {
        assert_eq!(log2_big(&BigUint::from(32u32)), 5.0);
        let big = num_traits::pow::pow(BigUint::from(3u32), 200);
        assert!((log2_big(&big) - 200.0 * 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn degenerate_range_gives_ones() {
        let g = random_group(&[2, 3], 1, 42);
        for f in g.factors() {
            assert!(f.iter().all(|z| *z == crate::linalg::ONE));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(random_group(&[2, 2], 100, 7), random_group(&[2, 2], 100, 7));
        assert_ne!(random_group(&[2, 2], 100, 7), random_group(&[2, 2], 100, 8));
    }

    #[test]
    fn uniform_entry_statistics() {
        // mean of U{1..8} is 4.5 with variance 63/12
        let mut total = 0.0;
        let mut count = 0.0;
        for seed in 0..10_000 {
            for f in random_group(&[2, 2], 8, seed).factors() {
                for z in f.iter() {
                    assert!(z.re >= 1.0 && z.re <= 8.0 && z.re.fract() == 0.0);
                    total += z.re;
                    count += 1.0;
                }
            }
        }
        let mean = total / count;
        let sigma = (63.0f64 / 12.0 / count).sqrt();
        assert!((mean - 4.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn big_draws_stay_in_range() {
        let m = BigUint::from(1000u32);
        let mut rng = rng_for(1);
        for _ in 0..2000 {
            let v = random_big_below(&m, &mut rng);
            assert!(v >= BigUint::one() && v <= m);
        }
        let (_, m) = randomization_bounds(2, 3, &[2, 2, 2]);
        let g = random_group_big(&[2, 2, 2], &m, 3);
        assert!(g.factors().iter().all(|f| f.iter().all(|z| z.re >= 1.0)));
    }
}
