use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use tensor_scaling::io::{spectrum_from_json, spectrum_to_json, tensor_from_json, tensor_to_json};
use tensor_scaling::linalg::{self, CMatrix};
use tensor_scaling::oracle::sinkhorn::sinkhorn;
use tensor_scaling::scaling::{scaling_step, target_matrix, Mode};
use tensor_scaling::spectrum::rationalize;
use tensor_scaling::{trace_distance, GroupTuple, HermitianMatrix, Rational, TargetSpectrum, Tensor, TensorFormat};

fn format_strategy() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (1usize..=3, prop::collection::vec(1usize..=3, 1..=3))
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    format_strategy().prop_flat_map(|(n0, dims)| {
        let total = n0 * dims.iter().product::<usize>();
        prop::collection::vec((-5i32..=5, -5i32..=5), total).prop_map(move |v| {
            let entries = v.into_iter().map(|(a, b)| Complex64::new(a as f64, b as f64)).collect();
            Tensor::new(TensorFormat::new(n0, dims.clone()).unwrap(), entries).unwrap()
        })
    })
}

fn matrix_strategy(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n * n)
        .prop_map(move |v| CMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

/// Upper triangular with diagonal entries bounded away from zero.
fn upper_strategy(n: usize) -> impl Strategy<Value = CMatrix> {
    (matrix_strategy(n), prop::collection::vec(0.5f64..2.0, n)).prop_map(move |(m, diag)| {
        CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => m[(i, j)],
            std::cmp::Ordering::Equal => linalg::c(diag[i]),
            std::cmp::Ordering::Greater => linalg::ZERO,
        })
    })
}

fn tensor_and_group() -> impl Strategy<Value = (Tensor, GroupTuple, GroupTuple)> {
    tensor_strategy().prop_flat_map(|x| {
        let dims = x.format().dims().to_vec();
        let group = |dims: &[usize]| {
            dims.iter()
                .map(|&n| upper_strategy(n).boxed())
                .collect::<Vec<_>>()
                .prop_map(|f| GroupTuple::new(f).unwrap())
        };
        (Just(x), group(&dims), group(&dims))
    })
}

fn hermitian(m: &CMatrix) -> HermitianMatrix {
    HermitianMatrix::new((m + m.adjoint()).scale(0.5)).unwrap()
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    let scale = a.norm().max(b.norm()).max(1.0);
    a.entries().iter().zip(b.entries()).all(|(x, y)| (x - y).norm() <= tol * scale)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn marginals_are_psd_with_trace_norm_squared(x in tensor_strategy()) {
        let n2 = x.norm().powi(2);
        for rho in x.marginals() {
            prop_assert!((rho.trace() - n2).abs() <= 1e-9 * n2.max(1.0));
            prop_assert!(rho.min_eigenvalue() >= -1e-9 * n2.max(1.0));
            prop_assert!(linalg::hermitian_defect(rho.matrix()) <= 1e-12 * n2.max(1.0));
        }
    }

    #[test]
    fn marginal_is_gram_of_flattening(x in tensor_strategy()) {
        for i in 1..=x.format().d() {
            let m = x.flatten(&[i]).unwrap();
            let direct = &m * m.adjoint();
            let rho = x.marginal(i).unwrap();
            prop_assert!(linalg::frobenius(&(rho.matrix() - direct)) <= 1e-9 * x.norm().powi(2).max(1.0));
        }
    }

    #[test]
    fn flatten_round_trips(x in tensor_strategy(), pick in 0usize..8) {
        let axes = x.format().axes().len();
        let rows: Vec<usize> = (0..axes - 1).filter(|a| (pick >> a) & 1 == 1 || *a == 0).collect();
        let m = x.flatten(&rows).unwrap();
        let back = Tensor::unflatten(x.format().clone(), &rows, &m).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn group_action_composes_and_inverts((x, g, h) in tensor_and_group()) {
        let gh = g.compose(&h).unwrap();
        let lhs = gh.apply(&x).unwrap();
        let rhs = g.apply(&h.apply(&x).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-9));
        let back = g.inverse().unwrap().apply(&g.apply(&x).unwrap()).unwrap();
        prop_assert!(close(&back, &x, 1e-9));
    }

    #[test]
    fn flattening_rank_is_group_invariant((x, g, _h) in tensor_and_group()) {
        let y = g.apply(&x).unwrap();
        for i in 1..=x.format().d() {
            let rx = linalg::rank(&x.flatten(&[i]).unwrap(), 1e-9);
            let ry = linalg::rank(&y.flatten(&[i]).unwrap(), 1e-9);
            prop_assert_eq!(rx, ry);
        }
    }

    #[test]
    fn trace_distance_dominates_spectral_distance(
        (a, b) in (1usize..=5).prop_flat_map(|n| (matrix_strategy(n), matrix_strategy(n)))
    ) {
        let (ha, hb) = (hermitian(&a), hermitian(&b));
        let td = trace_distance(&ha, &hb).unwrap();
        let sd: f64 = sorted_desc(ha.spectrum())
            .iter()
            .zip(sorted_desc(hb.spectrum()))
            .map(|(x, y)| (x - y).abs())
            .sum();
        prop_assert!(td >= sd - 1e-10 * (1.0 + sd));
    }

    #[test]
    fn scaling_step_fixes_the_chosen_marginal(x in tensor_strategy(), parabolic in any::<bool>()) {
        prop_assume!(x.marginals().iter().all(|m| !m.is_singular()));
        let dims = x.format().dims().to_vec();
        let p = TargetSpectrum::uniform(&dims);
        let mode = if parabolic { Mode::Parabolic } else { Mode::Borel };
        let mut start = GroupTuple::identity(&dims);
        start.set_factor(1, linalg::identity(dims[0]) * Complex64::new(1.0 / x.norm(), 0.0));
        let step = scaling_step(&start, &x, &p, mode).unwrap();
        let y = step.group.apply(&x).unwrap();
        let rho = y.marginal(step.index).unwrap();
        prop_assert!(trace_distance(&rho, &target_matrix(&p, step.index)).unwrap() <= 1e-9);
        let f = step.group.factor(step.index);
        if mode == Mode::Borel {
            prop_assert!(linalg::is_upper_triangular(f, 1e-12));
        }
    }

    #[test]
    fn tensor_json_round_trip(x in tensor_strategy()) {
        let back = tensor_from_json(&tensor_to_json(&x)).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn spectrum_json_round_trip(weights in prop::collection::vec(prop::collection::vec(1i64..20, 1..=4), 1..=3)) {
        let parts: Vec<Vec<Rational>> = weights
            .iter()
            .map(|w| {
                let mut w = w.clone();
                w.sort_unstable_by(|a, b| b.cmp(a));
                let s: i64 = w.iter().sum();
                w.iter().map(|&a| Rational::new(a, s)).collect()
            })
            .collect();
        let p = TargetSpectrum::new(parts).unwrap();
        prop_assert_eq!(spectrum_from_json(&spectrum_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn rationalization_is_close_and_capped(values in prop::collection::vec(0.0f64..1.0, 1..=5)) {
        let s: f64 = values.iter().sum();
        prop_assume!(s > 1e-3);
        let mut v: Vec<f64> = values.iter().map(|x| x / s).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let q = rationalize(&v, 1_000).unwrap();
        let total: Rational = q.iter().sum();
        prop_assert_eq!(total, Rational::from_integer(1));
        // partial sums are approximated, so their denominators obey the cap
        let mut cum = Rational::from_integer(0);
        for (a, b) in q.iter().zip(&v) {
            cum += a;
            prop_assert!(*cum.denom() <= 1_000);
            prop_assert!((tensor_scaling::spectrum::to_f64(a) - b).abs() <= 1e-2);
        }
    }

    #[test]
    fn sinkhorn_preserves_the_diagonal_scaling_form(
        (a, r, c) in (2usize..=4, 2usize..=4).prop_flat_map(|(n, m)| (
            prop::collection::vec(0.05f64..1.0, n * m).prop_map(move |v| DMatrix::from_vec(n, m, v)),
            prop::collection::vec(1.0f64..5.0, n),
            prop::collection::vec(1.0f64..5.0, m),
        ))
    ) {
        let (sr, sc): (f64, f64) = (r.iter().sum(), c.iter().sum());
        let c: Vec<f64> = c.iter().map(|v| v * sr / sc).collect();
        let res = sinkhorn(&a, &r, &c, 1e-9, 100_000).unwrap();
        prop_assert!(res.converged());
        prop_assert!(res.row_error <= 1e-9 && res.col_error <= 1e-9);
        let rebuilt = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| res.row_scaling[i] * a[(i, j)] * res.col_scaling[j]);
        prop_assert!((rebuilt - &res.matrix).abs().max() <= 1e-12 * res.matrix.max());
    }
}
