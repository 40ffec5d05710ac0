//! q-analog of the non-confluent Horn function `H_3`:
//!
//! ```text
//! H_{q,3}(a, b, c; z_1, z_2) = Σ (a,q)_{2n_1+n_2} (b,q)_{n_2}
//!                               / ((q,q)_{n_1} (q,q)_{n_2} (c,q)_{n_1+n_2}) z_1^{n_1} z_2^{n_2}
//! ```
//!
//! The three parameter derivatives are assembled here by hand from the
//! series engine, independently of the generic expansion in [`crate::deriv`]:
//!
//! ```text
//! D_b H = -z_2/(1-b) D_{z_2} H
//! D_a H = -1/(2(1-a)) [ W_2(∅) + W_2(z_1 -> q^2 z_1) + W_1(∅) + W_1(z_2 -> q z_2) ]   row (2, 1)
//! D_c H = +1/(2(1-c)) [ W_2(∅) + W_2(z_1 -> q z_1)   + W_1(∅) + W_1(z_2 -> q z_2) ]   row (1, 1), c -> qc
//! ```
//!
//! where `W_k` is the weighted sum with bracket `[r_k n_k]_q`.

use serde::{Deserialize, Serialize};

use crate::deriv::PREFACTOR_FLOOR;
use crate::error::{Error, Result};
use crate::param::ParamRef;
use crate::qcore::QBase;
use crate::real::Real;
use crate::series::{variable_derivative, weighted_evaluate, EvalConfig, SeriesSpec, ShiftState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub base: QBase,
}

impl H3Params {
    pub fn new(a: f64, b: f64, c: f64, q: f64) -> Result<Self> {
        Ok(H3Params {
            a,
            b,
            c,
            base: QBase::new(q)?,
        })
    }

    pub fn param_a() -> ParamRef {
        ParamRef::upper_multi(0)
    }

    pub fn param_b() -> ParamRef {
        ParamRef::upper_single(1, 0)
    }

    pub fn param_c() -> ParamRef {
        ParamRef::lower_multi(0)
    }
}

pub fn h3_spec(p: &H3Params) -> SeriesSpec {
    SeriesSpec::new(2, p.base)
        .with_upper_multi(p.a, vec![2.0, 1.0])
        .with_upper_single(1, p.b, 1.0)
        .with_lower_multi(p.c, vec![1.0, 1.0])
}

fn prefactor_guard(param: ParamRef, value: f64) -> Result<()> {
    if (1.0 - value).abs() < PREFACTOR_FLOOR {
        Err(Error::SingularPrefactor { param, value })
    } else {
        Ok(())
    }
}

/// `D_{b,q} H = -z_2/(1-b) D_{z_2,q} H`, no shift on `z_2`.
pub fn h3_deriv_b<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<T> {
    prefactor_guard(H3Params::param_b(), p.b)?;
    let spec = h3_spec(p);
    let d = variable_derivative(&spec, z, 1, cfg, None)?;
    Ok(-z[1] / (T::one() - T::from_f64(p.b)) * d.value)
}

/// Reading of the b-derivative with the general single-index formula's
/// `q^φ z_2` shift inside the variable derivative. Numerically this does not
/// match the Jackson difference in `b`; kept for the regression test that
/// pins the resolution.
pub fn h3_deriv_b_shifted<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<T> {
    prefactor_guard(H3Params::param_b(), p.b)?;
    let spec = h3_spec(p);
    let shift = ShiftState::none().shift_var(2, 1, 1.0);
    let d = variable_derivative(&spec, z, 1, cfg, Some(&shift))?;
    Ok(-z[1] / (T::one() - T::from_f64(p.b)) * d.value)
}

fn four_terms<T: Real>(
    spec: &SeriesSpec,
    z: &[T; 2],
    row: [f64; 2],
    cfg: &EvalConfig,
    shift: Option<&ShiftState>,
) -> Result<[T; 4]> {
    let w = |k: usize, prefix: &[usize]| -> Result<T> {
        Ok(weighted_evaluate(spec, z, k, &row, prefix, cfg, shift)?.value)
    };
    Ok([w(1, &[])?, w(1, &[0])?, w(0, &[])?, w(0, &[1])?])
}

/// The four weighted sums of `D_{a,q} H` (row `(2, 1)`), before the prefactor,
/// in the order `z_2 D H`, `z_2 D H(q^2 z_1)`, `z_1 D H(z_1^2)`, `z_1 D H(z_1^2, q z_2)`.
pub fn h3_deriv_a_terms<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<[T; 4]> {
    four_terms(&h3_spec(p), z, [2.0, 1.0], cfg, None)
}

/// `D_{a,q} H = -1/(2(1-a)) [four weighted sums]`.
pub fn h3_deriv_a<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<T> {
    prefactor_guard(H3Params::param_a(), p.a)?;
    let terms = h3_deriv_a_terms(p, z, cfg)?;
    let pre = -T::one() / (T::from_f64(2.0) * (T::one() - T::from_f64(p.a)));
    Ok(pre * terms.into_iter().sum::<T>())
}

/// The four weighted sums of `D_{c,q} H` (row `(1, 1)`, `c -> qc`).
pub fn h3_deriv_c_terms<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<[T; 4]> {
    let shift = ShiftState::none().scale_param(H3Params::param_c(), 1.0);
    four_terms(&h3_spec(p), z, [1.0, 1.0], cfg, Some(&shift))
}

/// `D_{c,q} H = +1/(2(1-c)) [four weighted sums with c -> qc]`.
pub fn h3_deriv_c<T: Real>(p: &H3Params, z: &[T; 2], cfg: &EvalConfig) -> Result<T> {
    prefactor_guard(H3Params::param_c(), p.c)?;
    let terms = h3_deriv_c_terms(p, z, cfg)?;
    let pre = T::one() / (T::from_f64(2.0) * (T::one() - T::from_f64(p.c)));
    Ok(pre * terms.into_iter().sum::<T>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::evaluate;

    fn std_params() -> H3Params {
        H3Params::new(0.3, 0.2, 0.7, 0.5).unwrap()
    }

    #[test]
    fn spec_shape() {
        let s = h3_spec(&std_params());
        assert_eq!(s.n_vars, 2);
        assert_eq!(s.upper_multi[0].exponents, vec![2.0, 1.0]);
        assert_eq!(s.lower_multi[0].exponents, vec![1.0, 1.0]);
        assert!(s.upper_single[0].is_empty());
        assert_eq!(s.upper_single[1][0].value, 0.2);
        assert!(s.lower_single.iter().all(Vec::is_empty));
    }

    #[test]
    fn derivatives_vanish_at_origin() {
        let cfg = EvalConfig::default();
        let p = std_params();
        let z = [0.0, 0.0];
        assert_eq!(h3_deriv_a(&p, &z, &cfg).unwrap(), 0.0);
        assert_eq!(h3_deriv_c(&p, &z, &cfg).unwrap(), 0.0);
        assert_eq!(h3_deriv_b(&p, &[0.1, 0.0], &cfg).unwrap(), 0.0);
        assert_eq!(evaluate(&h3_spec(&p), &z, &cfg, None).unwrap().value, 1.0);
    }

    #[test]
    fn singular_prefactors() {
        let cfg = EvalConfig::default();
        let z = [0.1, 0.1];
        let p = H3Params::new(1.0, 0.2, 0.7, 0.5).unwrap();
        assert!(matches!(h3_deriv_a(&p, &z, &cfg), Err(Error::SingularPrefactor { .. })));
        let p = H3Params::new(0.3, 1.0, 0.7, 0.5).unwrap();
        assert!(matches!(h3_deriv_b(&p, &z, &cfg), Err(Error::SingularPrefactor { .. })));
        let p = H3Params::new(0.3, 0.2, 1.0, 0.5).unwrap();
        assert!(matches!(h3_deriv_c(&p, &z, &cfg), Err(Error::SingularPrefactor { .. })));
    }

    #[test]
    fn b_at_zero_is_minus_z2_times_variable_derivative() {
        let cfg = EvalConfig::default();
        let p = H3Params::new(0.3, 0.0, 0.7, 0.5).unwrap();
        let z = [0.1, 0.12];
        let d = variable_derivative(&h3_spec(&p), &z, 1, &cfg, None).unwrap().value;
        let got = h3_deriv_b(&p, &z, &cfg).unwrap();
        assert!((got + z[1] * d).abs() < 1e-10 * got.abs());
    }
}
