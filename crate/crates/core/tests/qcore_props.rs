mod common;

use proptest::prelude::*;
use qlauricella::qcore::{
    jackson_derivative, q_bracket, q_pochhammer, q_pochhammer_negative_dual, split_q_bracket, PochOrder, QBase,
};

use common::{bracket, close, poch, poch_real, rel_err};

const EPS: f64 = 1e-17;

fn base() -> impl Strategy<Value = f64> {
    0.05f64..0.95
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn split_recombines(
        parts in prop::collection::vec((0.0f64..3.0, 0u64..=10), 1..=5),
        q in base(),
    ) {
        let (theta, m): (Vec<f64>, Vec<u64>) = parts.into_iter().unzip();
        let comps = split_q_bracket(&theta, &m, QBase::new(q).unwrap()).unwrap();
        prop_assert_eq!(comps.len(), theta.len());
        let total: f64 = comps.iter().map(|c| c.weight * c.bracket).sum();
        let want = bracket(theta.iter().zip(&m).map(|(t, &mi)| t * mi as f64).sum(), q);
        prop_assert!(close(total, want, 1e-12), "{} vs {}", total, want);
    }

    #[test]
    fn integer_pochhammer_matches_product(a in -3.0f64..3.0, n in 0u64..40, q in base()) {
        let got: f64 = q_pochhammer(a, QBase::new(q).unwrap(), PochOrder::NonNegInt(n), EPS).unwrap();
        prop_assert!(close(got, poch(a, q, n), 1e-12));
    }

    #[test]
    fn telescoping(a in -3.0f64..3.0, n in 0u64..40, q in base()) {
        let b = QBase::new(q).unwrap();
        let next: f64 = q_pochhammer(a, b, PochOrder::NonNegInt(n + 1), EPS).unwrap();
        let cur: f64 = q_pochhammer(a, b, PochOrder::NonNegInt(n), EPS).unwrap();
        prop_assert!(close(next, cur * (1.0 - a * q.powi(n as i32)), 1e-12));
    }

    #[test]
    fn negative_order_forms_agree(
        mag in 0.05f64..0.95,
        neg in any::<bool>(),
        n in 1u64..12,
        q in 0.2f64..0.9,
    ) {
        let a = if neg { -mag } else { mag };
        let b = QBase::new(q).unwrap();
        let direct: f64 = q_pochhammer(a, b, PochOrder::NegInt(n), EPS).unwrap();
        let dual: f64 = q_pochhammer_negative_dual(a, b, n).unwrap();
        prop_assert!(rel_err(dual, direct) < 1e-12, "{} vs {}", direct, dual);
        let inverse = poch(a * q.powi(-(n as i32)), q, n);
        prop_assert!(rel_err(direct * inverse, 1.0) < 1e-12);
    }

    #[test]
    fn real_order_matches_integer(a in -0.95f64..0.95, n in 0u64..=20, q in base()) {
        let b = QBase::new(q).unwrap();
        let real: f64 = q_pochhammer(a, b, PochOrder::Real(n as f64), EPS).unwrap();
        let int: f64 = q_pochhammer(a, b, PochOrder::NonNegInt(n), EPS).unwrap();
        prop_assert!(close(real, int, 1e-10), "{} vs {}", real, int);
    }

    #[test]
    fn real_order_matches_ratio_oracle(a in -0.95f64..0.95, x in 0.0f64..6.0, q in 0.05f64..0.8) {
        let got: f64 = q_pochhammer(a, QBase::new(q).unwrap(), PochOrder::Real(x), EPS).unwrap();
        prop_assert!(close(got, poch_real(a, q, x), 1e-12));
    }

    #[test]
    fn bracket_additivity(a in -3.0f64..3.0, b in -3.0f64..3.0, q in base()) {
        let base = QBase::new(q).unwrap();
        let lhs = q_bracket(a + b, base);
        let rhs = q_bracket(a, base) + q.powf(a) * q_bracket(b, base);
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn jackson_quotient_rule(
        f in prop::collection::vec(-1.0f64..1.0, 4),
        g in prop::collection::vec(0.1f64..1.0, 3),
        x in 0.1f64..1.5,
        q in base(),
    ) {
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
        let fp = |x: f64| poly(&f, x);
        let gp = |x: f64| poly(&g, x);
        let b = QBase::new(q).unwrap();
        let lhs = jackson_derivative(|x| fp(x) / gp(x), x, b).unwrap();
        let df = jackson_derivative(fp, x, b).unwrap();
        let dg = jackson_derivative(gp, x, b).unwrap();
        let rhs = (gp(x) * df - fp(x) * dg) / (gp(q * x) * gp(x));
        prop_assert!(close(lhs, rhs, 1e-10), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn jackson_of_monomial(n in 0i32..12, x in -2.0f64..2.0, q in base()) {
        prop_assume!(x.abs() > 1e-3);
        let d = jackson_derivative(|t: f64| t.powi(n), x, QBase::new(q).unwrap()).unwrap();
        let want = bracket(f64::from(n), q) * x.powi(n - 1);
        prop_assert!(close(d, want, 1e-10));
    }
}

#[test]
fn split_examples() {
    let q = QBase::new(0.5).unwrap();
    let c = split_q_bracket(&[2.0, 1.0], &[1, 1], q).unwrap();
    assert!((c[0].weight - 0.75).abs() < 1e-15);
    assert!((c[1].weight - 0.625).abs() < 1e-15);
    let total: f64 = c.iter().map(|c| c.weight * c.bracket).sum();
    assert!((total - 1.75).abs() < 1e-15);

    let q = QBase::new(0.3).unwrap();
    let c = split_q_bracket(&[0.5, 0.0, 1.3], &[2, 5, 1], q).unwrap();
    let total: f64 = c.iter().map(|c| c.weight * c.bracket).sum();
    assert!(rel_err(total, bracket(2.3, 0.3)) < 1e-14);
}
