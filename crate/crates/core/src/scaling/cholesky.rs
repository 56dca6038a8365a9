//! Upper-triangular and block-upper-triangular factorizations `ρ = R R†`.

use crate::error::{bail, Result};
use crate::hermitian::HermitianMatrix;
use crate::linalg::{self, block_offsets, CMatrix, ZERO};

fn check_nonsingular(rho: &HermitianMatrix) -> Result<()> {
    if rho.is_singular() {
        bail!(
            Singular,
            "marginal has smallest eigenvalue {:.3e} against trace {:.3e}",
            rho.min_eigenvalue(),
            rho.trace()
        );
    }
    Ok(())
}

/// Factor `ρ = R R†` with `R` upper triangular and a positive diagonal.
///
/// Computed from the bottom-right corner upwards; this is the reversed
/// lower Cholesky factor `P L P`.
pub fn upper_cholesky(rho: &HermitianMatrix) -> Result<CMatrix> {
    check_nonsingular(rho)?;
    let a = rho.matrix();
    let n = a.nrows();
    let mut r = CMatrix::zeros(n, n);
    for j in (0..n).rev() {
        let mut d = a[(j, j)].re;
        for k in j + 1..n {
            d -= r[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            bail!(Singular, "pivot {j} is not positive ({d:.3e})");
        }
        let rjj = d.sqrt();
        r[(j, j)] = linalg::c(rjj);
        for i in 0..j {
            let mut s = a[(i, j)];
            for k in j + 1..n {
                s -= r[(i, k)] * r[(j, k)].conj();
            }
            r[(i, j)] = s / rjj;
        }
    }
    Ok(r)
}

/// Factor `ρ = R R†` with `R` block upper triangular for the given block
/// sizes (listed from the top). Each diagonal block is the Hermitian square
/// root of the matching Schur complement, so a single block gives `ρ^{1/2}`
/// and unit blocks give [`upper_cholesky`].
pub fn block_cholesky(rho: &HermitianMatrix, blocks: &[usize]) -> Result<CMatrix> {
    let n = rho.n();
    if blocks.iter().sum::<usize>() != n || blocks.contains(&0) {
        bail!(InvalidArgument, "block sizes {blocks:?} do not partition {n}");
    }
    check_nonsingular(rho)?;
    if blocks.iter().all(|&b| b == 1) {
        return upper_cholesky(rho);
    }
    let offsets = block_offsets(blocks);
    let mut r = CMatrix::zeros(n, n);
    // remaining leading principal part still to be factored
    let mut rest = rho.matrix().clone();
    for b in (0..blocks.len()).rev() {
        let (start, end) = (offsets[b], offsets[b + 1]);
        let c = rest.view((start, start), (end - start, end - start)).into_owned();
        let r22 = linalg::psd_sqrt(&c);
        r.view_mut((start, start), (end - start, end - start)).copy_from(&r22);
        if start == 0 {
            break;
        }
        let r22_inv_adj = linalg::inverse(&r22)?.adjoint();
        let bmat = rest.view((0, start), (start, end - start)).into_owned();
        let r12 = &bmat * &r22_inv_adj;
        r.view_mut((0, start), (start, end - start)).copy_from(&r12);
        let a = rest.view((0, 0), (start, start)).into_owned();
        let schur = &a - &r12 * r12.adjoint();
        rest = CMatrix::from_fn(n, n, |i, j| if i < start && j < start { schur[(i, j)] } else { ZERO });
    }
    Ok(r)
}

/// `ln |det|` of each diagonal block of a block-upper-triangular matrix.
pub fn block_log_dets(r: &CMatrix, blocks: &[usize]) -> Vec<f64> {
    let offsets = block_offsets(blocks);
    offsets
        .windows(2)
        .map(|w| {
            let size = w[1] - w[0];
            if size == 1 {
                r[(w[0], w[0])].norm().ln()
            } else {
                r.view((w[0], w[0]), (size, size)).into_owned().determinant().norm().ln()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, frobenius, identity, is_block_upper_triangular, is_upper_triangular};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::new(&a * a.adjoint() + identity(n) * linalg::c(0.1)).unwrap()
    }

    /// Reversal of the standard lower Cholesky factor: R = P L P.
    fn reversed_lower_cholesky(rho: &HermitianMatrix) -> CMatrix {
        let n = rho.n();
        let p = CMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { linalg::ONE } else { ZERO });
        let l = (&p * rho.matrix() * &p).cholesky().unwrap().l();
        &p * l * &p
    }

    #[test]
    fn identity_and_diagonal() {
        let r = upper_cholesky(&HermitianMatrix::from_real_diag(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(r, identity(3));
        let r = upper_cholesky(&HermitianMatrix::from_real_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(r, from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]));
    }

    #[test]
    fn two_by_two_example() {
        let rho = HermitianMatrix::new(from_real_rows(&[&[2.0, 1.0], &[1.0, 1.0]])).unwrap();
        let r = upper_cholesky(&rho).unwrap();
        assert!(frobenius(&(r - from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]))) < 1e-15);
        let rb = block_cholesky(&rho, &[1, 1]).unwrap();
        assert!(frobenius(&(rb - from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]))) < 1e-15);
    }

    #[test]
    fn matches_reversed_lower_cholesky() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            for _ in 0..20 {
                let rho = random_pd(n, &mut rng);
                let r = upper_cholesky(&rho).unwrap();
                let oracle = reversed_lower_cholesky(&rho);
                assert!(frobenius(&(&r - &oracle)) < 1e-10 * frobenius(&oracle));
                assert!(is_upper_triangular(&r, 0.0));
                for j in 0..n {
                    assert!(r[(j, j)].im == 0.0 && r[(j, j)].re > 0.0);
                }
            }
        }
    }

    #[test]
    fn single_block_is_hermitian_square_root() {
        let rho = HermitianMatrix::from_real_diag(&[4.0, 1.0]);
        let r = block_cholesky(&rho, &[2]).unwrap();
        assert!(frobenius(&(r - from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]))) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_pd(3, &mut rng);
        let r = block_cholesky(&rho, &[3]).unwrap();
        assert!(linalg::hermitian_defect(&r) < 1e-12);
    }

    #[test]
    fn mixed_blocks_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for blocks in [vec![1, 2], vec![2, 1], vec![2, 2], vec![1, 2, 1], vec![3, 1]] {
            let n: usize = blocks.iter().sum();
            let rho = random_pd(n, &mut rng);
            let r = block_cholesky(&rho, &blocks).unwrap();
            let err = frobenius(&(&r * r.adjoint() - rho.matrix())) / frobenius(rho.matrix());
            assert!(err < 1e-10, "{blocks:?}: {err}");
            assert!(is_block_upper_triangular(&r, &blocks, 1e-14));
        }
    }

    #[test]
    fn singular_input_rejected() {
        let rho = HermitianMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(upper_cholesky(&rho), Err(crate::Error::Singular(_))));
        assert!(block_cholesky(&rho, &[2]).is_err());
        assert!(block_cholesky(&HermitianMatrix::from_real_diag(&[1.0, 1.0]), &[1]).is_err());
    }

    #[test]
    fn log_dets_of_blocks() {
        let r = from_real_rows(&[&[2.0, 5.0, 1.0], &[0.0, 1.0, 3.0], &[0.0, 2.0, 4.0]]);
        let l = block_log_dets(&r, &[1, 2]);
        assert!((l[0] - 2f64.ln()).abs() < 1e-14);
        assert!((l[1] - 2f64.ln()).abs() < 1e-14);
    }
}
