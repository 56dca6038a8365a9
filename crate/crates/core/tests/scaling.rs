use num_complex::Complex64;

use tensor_scaling::io::{report_to_json, verdict_to_json};
use tensor_scaling::oracle::{membership, qmp, Answer};
use tensor_scaling::scaling::{
    marginal_distances, run_general_scaling, run_scaling, MpsParam, Mode, RandRange, ScalingConfig, Verdict,
    CAPACITY_SLACK,
};
use tensor_scaling::{Rational, TargetSpectrum, Tensor};

fn r(a: i64, b: i64) -> Rational {
    Rational::new(a, b)
}

fn generic() -> Tensor {
    Tensor::from_real(1, &[2, 2, 2], &[3.0, -1.0, 2.0, 5.0, 1.0, 4.0, -2.0, 7.0]).unwrap()
}

fn far_point() -> TargetSpectrum {
    TargetSpectrum::new(vec![vec![r(1, 2), r(1, 2)], vec![r(9, 10), r(1, 10)], vec![r(9, 10), r(1, 10)]]).unwrap()
}

#[test]
fn capacity_certificate_rejects_far_point_early() {
    let cfg = ScalingConfig::new(0.01).with_seed(4);
    let rep = run_scaling(&generic(), &far_point(), &cfg).unwrap();
    assert_eq!(rep.verdict, Verdict::NotInPolytope);
    assert!(rep.reason.contains("capacity"), "{}", rep.reason);
    assert!(rep.iterations < rep.budget_t);
    let floor = 1.0 / 8.0;
    let last = rep.trace.last().unwrap().capacity.unwrap();
    assert!(last < floor * (-CAPACITY_SLACK).exp());
    assert!(rep.final_distances.iter().all(|d| d.is_finite()));
}

#[test]
fn certificate_is_not_used_for_non_integral_inputs() {
    let x = generic().scaled(Complex64::new(0.5, 0.0));
    let cfg = ScalingConfig::new(0.01).with_rand_range(RandRange::Disabled).with_max_iters(300);
    let rep = run_scaling(&x, &far_point(), &cfg).unwrap();
    assert_ne!(rep.verdict, Verdict::Scaled);
    assert!(!rep.reason.contains("capacity"), "{}", rep.reason);
    assert!(rep.warnings.iter().any(|w| w.contains("non-integral")));
}

#[test]
fn max_iters_overrides_the_budget() {
    let cfg = ScalingConfig::new(1e-12).with_max_iters(3).with_rand_range(RandRange::Disabled);
    let x = Tensor::from_real(2, &[2, 2], &[1.0, 2.0, 3.0, 4.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let p = TargetSpectrum::new(vec![vec![r(2, 3), r(1, 3)], vec![r(3, 5), r(2, 5)]]).unwrap();
    let rep = run_scaling(&x, &p, &cfg).unwrap();
    assert_eq!(rep.budget_t, 3);
    assert!(rep.iterations <= 3);
}

#[test]
fn scaled_group_reproduces_the_reported_distances() {
    let x = Tensor::from_real(2, &[2, 3], &[3.0, -1.0, 2.0, 5.0, 1.0, 4.0, -2.0, 7.0, 1.0, 1.0, 0.0, 2.0]).unwrap();
    let p = TargetSpectrum::new(vec![vec![r(3, 5), r(2, 5)], vec![r(1, 2), r(1, 4), r(1, 4)]]).unwrap();
    for mode in [Mode::Borel, Mode::Parabolic] {
        let rep = run_scaling(&x, &p, &ScalingConfig::new(1e-4).with_mode(mode).with_max_iters(50_000)).unwrap();
        assert!(rep.is_scaled(), "{mode:?}: {}", rep.reason);
        let y = rep.group.apply(&x).unwrap();
        assert!((y.norm() - 1.0).abs() < 1e-8);
        let fresh = marginal_distances(&y, &p);
        for (a, b) in fresh.iter().zip(&rep.final_distances) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn parabolic_uniform_run_ignores_the_seed() {
    let x = generic();
    let p = TargetSpectrum::uniform(&[2, 2, 2]);
    let run = |seed| run_scaling(&x, &p, &ScalingConfig::new(1e-6).with_mode(Mode::Parabolic).with_seed(seed)).unwrap();
    let (a, b) = (run(1), run(2));
    assert!(a.is_scaled());
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.group, b.group);
}

#[test]
fn singular_targets_reach_a_product_state() {
    let p = TargetSpectrum::new(vec![vec![r(1, 1), r(0, 1)]; 3]).unwrap();
    let rep = run_scaling(&generic(), &p, &ScalingConfig::new(1e-3)).unwrap();
    assert!(rep.is_scaled(), "{}", rep.reason);
    assert!(rep.max_distance() <= 1e-3);
}

#[test]
fn membership_witness_reverifies() {
    let x = generic();
    let p = TargetSpectrum::uniform(&[2, 2, 2]);
    let v = membership(&x, &p, &ScalingConfig::new(1e-3), 3).unwrap();
    assert_eq!(v.answer, Answer::In);
    let mut y = v.witness.as_ref().unwrap().apply(&x).unwrap();
    y.scale_in_place(1.0 / y.norm());
    assert!(marginal_distances(&y, &p).iter().all(|&d| d <= 1e-3));
    let json = verdict_to_json(&v);
    assert_eq!(json["answer"], "IN");
}

#[test]
fn qmp_monogamy_is_far() {
    let p = TargetSpectrum::new(vec![vec![r(1, 2), r(1, 2)], vec![r(1, 1), r(0, 1)], vec![r(1, 1), r(0, 1)]]).unwrap();
    let v = qmp(&p, &ScalingConfig::new(0.1).with_max_iters(5_000), 3).unwrap();
    assert_eq!(v.answer, Answer::EpsFar);
    assert!(v.witness.is_none());
}

#[test]
fn mps_general_scaling_to_uniform() {
    let phi = MpsParam::new(3, 2, 2).unwrap();
    let p = TargetSpectrum::uniform(&[2, 2, 2]);
    let (rep, x) = run_general_scaling(&phi, &p, &ScalingConfig::new(1e-3).with_seed(7)).unwrap();
    assert!(rep.is_scaled(), "{}", rep.reason);
    assert!(x.is_gaussian_integer());
}

#[test]
fn report_json_has_the_documented_keys() {
    let rep = run_scaling(&generic(), &TargetSpectrum::uniform(&[2, 2, 2]), &ScalingConfig::new(1e-3)).unwrap();
    let json = report_to_json(&rep);
    for key in ["verdict", "reason", "iterations", "budgetT", "finalDistances", "trace", "group", "warnings"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["verdict"], "SCALED");
    let first = &json["trace"][0];
    for key in ["i", "index", "eps", "norm", "capacity"] {
        assert!(first.get(key).is_some(), "missing trace.{key}");
    }
}
