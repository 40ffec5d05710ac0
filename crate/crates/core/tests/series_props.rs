mod common;
mod strategies;

use proptest::prelude::*;
use qlauricella::qcore::{infinite_product, jackson_derivative, ProductConfig, QBase};
use qlauricella::series::{
    evaluate, omega, validate, variable_derivative, weighted_evaluate, Diagnostic, EvalConfig, MultiIndex, SeriesSpec,
};

use common::{bracket, brute_sum, close, dot, rel_err, term};
use strategies::{exponent, point, positive_point, spec};

/// Sum of absolute term values, the scale of rounding error in a sum
/// with sign changes.
fn abs_scale(s: &SeriesSpec, x: &[f64], cap: u32) -> f64 {
    brute_sum(s.n_vars, cap, |m| term(s, x, m).abs())
}

fn permuted(spec: &SeriesSpec, perm: &[usize]) -> SeriesSpec {
    let mut out = spec.clone();
    let row = |r: &Vec<f64>| perm.iter().map(|&p| r[p]).collect::<Vec<f64>>();
    for (o, p) in out.upper_multi.iter_mut().zip(&spec.upper_multi) {
        o.exponents = row(&p.exponents);
    }
    for (o, p) in out.lower_multi.iter_mut().zip(&spec.lower_multi) {
        o.exponents = row(&p.exponents);
    }
    out.upper_single = perm.iter().map(|&p| spec.upper_single[p].clone()).collect();
    out.lower_single = perm.iter().map(|&p| spec.lower_single[p].clone()).collect();
    out
}

fn cap_config(cap: u32) -> EvalConfig {
    EvalConfig {
        eps_term: f64::MIN_POSITIVE,
        n_max_per_index: cap,
        ..EvalConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn relabeling_equivariance(
        (s, x, perm) in (1usize..=3).prop_flat_map(|n| (
            spec(n, vec![0.2, 0.5, 0.8]),
            positive_point(n, 0.2),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )),
    ) {
        let cfg = EvalConfig::default();
        let a = evaluate(&s, &x, &cfg, None).unwrap().value;
        let px: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
        let b = evaluate(&permuted(&s, &perm), &px, &cfg, None).unwrap().value;
        prop_assert!(rel_err(b, a) < 1e-13, "{} vs {}", a, b);
    }

    #[test]
    fn relabeling_equivariance_with_sign_changes(
        (s, x, perm) in (1usize..=3).prop_flat_map(|n| (
            spec(n, vec![0.2, 0.5, 0.8]),
            point(n, 0.2),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )),
    ) {
        let cfg = EvalConfig::default();
        let a = evaluate(&s, &x, &cfg, None).unwrap().value;
        let px: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
        let b = evaluate(&permuted(&s, &perm), &px, &cfg, None).unwrap().value;
        prop_assert!((a - b).abs() < 1e-13 * abs_scale(&s, &x, 60), "{} vs {}", a, b);
    }

    #[test]
    fn brute_force_equivalence(
        (s, x) in (1usize..=2).prop_flat_map(|n| (spec(n, vec![0.2, 0.5, 0.8]), positive_point(n, 0.5))),
        cap in 1u32..=12,
    ) {
        let got = evaluate(&s, &x, &cap_config(cap), None).unwrap().value;
        let want = brute_sum(s.n_vars, cap, |m| term(&s, &x, m));
        prop_assert!(rel_err(got, want) < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn brute_force_equivalence_with_sign_changes(
        (s, x) in (1usize..=2).prop_flat_map(|n| (spec(n, vec![0.2, 0.5, 0.8]), point(n, 0.5))),
        cap in 1u32..=12,
    ) {
        let got = evaluate(&s, &x, &cap_config(cap), None).unwrap().value;
        let want = brute_sum(s.n_vars, cap, |m| term(&s, &x, m));
        prop_assert!((got - want).abs() < 1e-12 * abs_scale(&s, &x, cap), "{} vs {}", got, want);
    }

    #[test]
    fn omega_matches_definition(
        s in (1usize..=3).prop_flat_map(|n| spec(n, vec![0.2, 0.5, 0.8])),
        idx in prop::collection::vec(0u32..8, 3),
    ) {
        let m = MultiIndex(idx[..s.n_vars].to_vec());
        let got: f64 = omega(&s, &m).unwrap();
        prop_assert!(rel_err(got, common::omega(&s, &m.0)) < 1e-12);
    }

    #[test]
    fn jackson_consistency(s in spec(1, vec![0.2, 0.5, 0.8]), x in -0.2f64..0.2) {
        prop_assume!(x.abs() > 1e-3);
        let cfg = EvalConfig::default();
        let d = variable_derivative(&s, &[x], 0, &cfg, None).unwrap().value;
        let f = |t: f64| evaluate(&s, &[t], &cfg, None).unwrap().value;
        let j = jackson_derivative(f, x, s.base).unwrap();
        prop_assert!(close(d, j, 1e-10), "{} vs {}", d, j);
    }

    #[test]
    fn cyclic_weighted_sums_recombine(
        (s, x, row) in (1usize..=3).prop_flat_map(|n| (
            spec(n, vec![0.2, 0.5, 0.8]),
            point(n, 0.2),
            prop::collection::vec(exponent(), n),
        )),
    ) {
        let cfg = EvalConfig::default();
        let active: Vec<usize> = (0..s.n_vars).filter(|&i| row[i] > 0.0).collect();
        prop_assume!(!active.is_empty());
        let kk = active.len();
        let mut total = 0.0;
        for (pos, &k) in active.iter().enumerate() {
            for len in 0..kk {
                let prefix: Vec<usize> = (1..=len).map(|d| active[(pos + d) % kk]).collect();
                total += weighted_evaluate(&s, &x, k, &row, &prefix, &cfg, None).unwrap().value;
            }
        }
        total /= kk as f64;
        let q = s.base.get();
        let want = brute_sum(s.n_vars, 40, |m| bracket(dot(&row, m), q) * term(&s, &x, m));
        prop_assert!(close(total, want, 1e-11), "{} vs {}", total, want);
    }

    #[test]
    fn converged_sums_end_negligible(
        (s, x) in (1usize..=3).prop_flat_map(|n| (spec(n, vec![0.2, 0.5, 0.8]), point(n, 0.2))),
    ) {
        let cfg = EvalConfig::default();
        let r = evaluate(&s, &x, &cfg, None).unwrap();
        prop_assert!(!r.truncated);
        prop_assert!(r.last_shell_magnitude <= cfg.eps_term * r.value.abs());
    }
}

#[test]
fn q_exponential_and_q_binomial() {
    let cfg = EvalConfig::default();
    let b = QBase::new(0.5).unwrap();
    let pc = ProductConfig::default();
    let e = evaluate(&SeriesSpec::new(1, b), &[0.25], &cfg, None).unwrap().value;
    let want = 1.0 / infinite_product(0.25, b, &pc).unwrap();
    assert!(rel_err(e, want) < 1e-12);
    assert!(rel_err(e, 1.0 / common::poch_inf(0.25, 0.5)) < 1e-12);

    let s = SeriesSpec::new(1, b).with_upper_single(0, 0.3, 1.0);
    let v = evaluate(&s, &[0.25], &cfg, None).unwrap().value;
    let want = common::poch_inf(0.075, 0.5) / common::poch_inf(0.25, 0.5);
    assert!(rel_err(v, want) < 1e-12);
}

#[test]
fn weighted_evaluate_examples() {
    let cfg = EvalConfig::default();
    let b = QBase::new(0.5).unwrap();
    let h3 = SeriesSpec::new(2, b)
        .with_upper_multi(0.3, vec![2.0, 1.0])
        .with_upper_single(1, 0.2, 1.0)
        .with_lower_multi(0.7, vec![1.0, 1.0]);
    let x = [0.1, 0.12];

    let zero = weighted_evaluate(&h3, &x, 0, &[0.0, 0.0], &[], &cfg, None)
        .unwrap()
        .value;
    assert_eq!(zero, 0.0);

    for k in 0..2 {
        let mut e = [0.0, 0.0];
        e[k] = 1.0;
        let w = weighted_evaluate(&h3, &x, k, &e, &[], &cfg, None).unwrap().value;
        let d = variable_derivative(&h3, &x, k, &cfg, None).unwrap().value;
        assert!(rel_err(w, x[k] * d) < 1e-13);
    }

    let w = weighted_evaluate(&h3, &x, 0, &[2.0, 1.0], &[1], &cfg, None)
        .unwrap()
        .value;
    let want = brute_sum(2, 60, |m| {
        bracket(2.0 * f64::from(m[0]), 0.5) * 0.5f64.powi(m[1] as i32) * term(&h3, &x, m)
    });
    assert!(rel_err(w, want) < 1e-13);

    let err = weighted_evaluate(&h3, &x, 0, &[2.0, 1.0], &[0], &cfg, None);
    assert!(err.is_err());
}

#[test]
fn pole_on_the_lattice_is_reported() {
    let b = QBase::new(0.5).unwrap();
    let s = SeriesSpec::new(1, b).with_lower_multi(2.0, vec![1.0]);
    let d = validate(&s, &EvalConfig::default());
    assert!(matches!(d.as_slice(), [Diagnostic::SingularLowerParameter { .. }]));
    // (2; 0.5)_1 = -1, (2; 0.5)_2 = 0: the s = 2 factor vanishes
    assert_eq!(common::poch(2.0, 0.5, 2), 0.0);
}
