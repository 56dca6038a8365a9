use super::*;
use crate::group::GroupTuple;
use crate::hwv::chi;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn part(v: &[usize]) -> Partition {
    Partition::new(v.to_vec()).unwrap()
}

fn rd(v: &[usize]) -> ReductionData {
    ReductionData::new(part(v), v.len()).unwrap()
}

fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_upper(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = random_matrix(n, n, rng);
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = ZERO;
        }
        m[(i, i)] = Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-0.3..0.3));
    }
    m
}

/// Kraus-sum oracle built from the τ matrices.
fn kraus(rd: &ReductionData, x: &CMatrix) -> CMatrix {
    (1..=rd.blocks()).fold(CMatrix::zeros(rd.ell(), rd.ell()), |acc, j| {
        let t = tau(rd, j).unwrap();
        acc + &t * x * t.adjoint()
    })
}

fn all_partitions_up_to(max_ell: usize) -> Vec<Partition> {
    (1..=max_ell).flat_map(|l| Partition::all_of(l, l)).collect()
}

#[test]
fn conjugate_examples() {
    assert_eq!(conjugate_partition(&part(&[2, 1])), part(&[2, 1]));
    assert_eq!(conjugate_partition(&part(&[3, 1])), part(&[2, 1, 1]));
    assert_eq!(conjugate_partition(&part(&[4])), part(&[1, 1, 1, 1]));
}

#[test]
fn rejects_missing_parts() {
    assert!(ReductionData::new(part(&[2, 1]), 3).is_err());
    assert!(ReductionData::new(part(&[2, 1]), 2).is_ok());
}

#[test]
fn tau_examples() {
    assert_eq!(tau(&rd(&[1]), 1).unwrap(), CMatrix::identity(1, 1));
    let r = rd(&[2, 1]);
    let t1 = linalg::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
    let t2 = linalg::from_real_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
    assert_eq!(tau(&r, 1).unwrap(), t1);
    assert_eq!(tau(&r, 2).unwrap(), t2);
    assert_eq!(t2.adjoint() * &t1, CMatrix::zeros(2, 2));
    assert!(tau(&r, 0).is_err() && tau(&r, 3).is_err());
}

#[test]
fn tau_orthogonality_for_all_small_partitions() {
    for p in all_partitions_up_to(6) {
        let r = ReductionData::new(p.clone(), p.len()).unwrap();
        for i in 1..=r.blocks() {
            for j in 1..=r.blocks() {
                let prod = tau(&r, j).unwrap().adjoint() * tau(&r, i).unwrap();
                if i == j {
                    let mu = r.mu().parts()[i - 1];
                    let n = r.n();
                    let expect = CMatrix::from_fn(n, n, |a, b| if a == b && a >= n - mu { ONE } else { ZERO });
                    assert_eq!(prod, expect);
                } else {
                    assert_eq!(prod, CMatrix::zeros(r.n(), r.n()));
                }
            }
        }
    }
}

#[test]
fn t_underline_matches_kraus_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in all_partitions_up_to(6) {
        let r = ReductionData::new(p.clone(), p.len()).unwrap();
        let x = random_matrix(r.n(), r.n(), &mut rng);
        assert!((t_underline(&r, &x).unwrap() - kraus(&r, &x)).norm() < 1e-14);
        let y = random_matrix(r.ell(), r.ell(), &mut rng);
        let adj = (1..=r.blocks()).fold(CMatrix::zeros(r.n(), r.n()), |acc, j| {
            let t = tau(&r, j).unwrap();
            acc + t.adjoint() * &y * t
        });
        assert!((t_underline_adjoint(&r, &y).unwrap() - adj).norm() < 1e-14);
    }
}

#[test]
fn single_column_partition_gives_identity_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = rd(&[1, 1, 1]);
    let x = random_matrix(3, 3, &mut rng);
    assert_eq!(t_underline(&r, &x).unwrap(), x);
}

#[test]
fn reduction_identities_exact() {
    for p in all_partitions_up_to(6) {
        let r = ReductionData::new(p.clone(), p.len()).unwrap();
        let (n, ell) = (r.n(), r.ell());
        let big = linalg::real_diag(&r.big_lambda());
        assert!((t_underline(&r, &linalg::identity(n)).unwrap() - linalg::identity(ell)).norm() <= 1e-12);
        assert!((t_underline_adjoint(&r, &linalg::identity(ell)).unwrap() - &big).norm() <= 1e-12);
        assert!((t_map(&r, &big).unwrap() - linalg::identity(ell)).norm() <= 1e-12);
        assert!((t_map_adjoint(&r, &linalg::identity(ell)).unwrap() - linalg::identity(n)).norm() <= 1e-12);
        assert!((h_hom(&r, &linalg::identity(n)).unwrap() - linalg::identity(ell)).norm() <= 1e-12);
    }
}

#[test]
fn injectivity_via_first_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = rd(&[3, 2, 2]);
    let x = random_matrix(3, 3, &mut rng);
    let t1 = tau(&r, 1).unwrap();
    assert!((t1.adjoint() * t_underline(&r, &x).unwrap() * t1 - x).norm() < 1e-14);
}

#[test]
fn h_is_multiplicative_and_intertwines() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [part(&[2, 1]), part(&[3, 2, 1]), part(&[2, 2, 1, 1])] {
        let r = ReductionData::new(p.clone(), p.len()).unwrap();
        let n = r.n();
        for _ in 0..50 {
            let (b, b2) = (random_upper(n, &mut rng), random_upper(n, &mut rng));
            let lhs = h_hom(&r, &(&b * &b2)).unwrap();
            let rhs = h_hom(&r, &b).unwrap() * h_hom(&r, &b2).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            let x = random_matrix(n, n, &mut rng);
            let lhs = t_map(&r, &(&b * &x)).unwrap();
            let rhs = h_hom(&r, &b).unwrap() * t_map(&r, &x).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            // L b = (I ⊗ T̲(b)) L
            let l = l_matrix(&r);
            let lift = linalg::identity(r.blocks()).kronecker(&t_underline(&r, &b).unwrap());
            assert!((&l * &b - lift * &l).norm() < 1e-12);
        }
    }
}

#[test]
fn det_identity_matches_character() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in all_partitions_up_to(6) {
        let r = ReductionData::new(p.clone(), p.len()).unwrap();
        let n = r.n();
        let b = random_upper(n, &mut rng);
        let binv = linalg::inverse(&b).unwrap();
        let lhs = det_t_underline(&r, &binv).unwrap();
        let full = t_underline(&r, &binv).unwrap().determinant();
        assert!((lhs - full).norm() <= 1e-12 * full.norm().max(1.0));
        let star: Vec<i64> = p.parts().iter().rev().map(|&v| -(v as i64)).collect();
        let g = GroupTuple::new(vec![b]).unwrap();
        let rhs = chi(&[star], &g).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{p:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn l_matrix_from_tau_stack_and_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let r = rd(&[3, 1]);
    let mut stacked = CMatrix::zeros(r.blocks() * r.ell(), r.n());
    for j in 1..=r.blocks() {
        let t = tau(&r, j).unwrap();
        stacked.view_mut(((j - 1) * r.ell(), 0), (r.ell(), r.n())).copy_from(&t);
    }
    assert_eq!(l_matrix(&r), stacked);
    let v = random_matrix(2, 1, &mut rng);
    let lv = l_matrix(&r) * &v;
    let expect: f64 = r.mu().parts().iter().map(|&m| v.rows(2 - m, m).norm_squared()).sum();
    assert!((lv.norm_squared() - expect).abs() < 1e-12);
}

#[test]
fn reduce_tensor_is_relabeling_for_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vals: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = Tensor::from_real(2, &[2, 3], &vals).unwrap();
    let l = reduce_tensor(&y, &[part(&[1, 1]), part(&[1, 1, 1])]).unwrap();
    assert_eq!(l.format(), y.format());
    assert_eq!(l.entries(), y.entries());
}

#[test]
fn reduce_tensor_matches_axis_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let vals: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = Tensor::from_real(2, &[2, 2], &vals).unwrap();
    let lam = [part(&[2, 1]), part(&[3, 1])];
    let l = reduce_tensor(&y, &lam).unwrap();
    let r1 = rd(&[2, 1]);
    let r2 = rd(&[3, 1]);
    assert_eq!(l.format().n0(), 2 * 2 * 3);
    assert_eq!(l.format().dims(), &[3, 4]);
    // oracle: apply the stacked L matrices, then read (j1, s1), (j2, s2)
    let big = y.apply_axis(1, &l_matrix(&r1)).unwrap().apply_axis(2, &l_matrix(&r2)).unwrap();
    for i0 in 0..2 {
        for j1 in 0..2 {
            for j2 in 0..3 {
                for s1 in 0..3 {
                    for s2 in 0..4 {
                        let a = l.get(&[(i0 * 2 + j1) * 3 + j2, s1, s2]).unwrap();
                        let b = big.get(&[i0, j1 * 3 + s1, j2 * 4 + s2]).unwrap();
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }
    assert!((l.norm() - big.norm()).abs() < 1e-12);
}

#[test]
fn marginal_transport() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lam = [part(&[2, 1]), part(&[3, 2, 1])];
    for _ in 0..10 {
        let f = TensorFormat::new(2, vec![2, 3]).unwrap();
        let y = Tensor::from_fn(f, |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let z = reduce_tensor_normalized(&y, &lam).unwrap();
        for (i, l) in lam.iter().enumerate() {
            let r = ReductionData::new(l.clone(), l.len()).unwrap();
            let expect = transported_marginal(&r, &y.marginal(i + 1).unwrap()).unwrap();
            let got = z.marginal(i + 1).unwrap();
            assert!((got.matrix() - expect.matrix()).norm() < 1e-12);
        }
    }
}
