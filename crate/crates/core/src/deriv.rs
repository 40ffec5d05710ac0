//! q-derivatives of the series with respect to its parameters.
//!
//! For a parameter `p` whose Pochhammer order is `N(s) = r·s` (with `r` the
//! parameter's exponent row), the Jackson difference in `p` collapses to a
//! single q-bracket:
//!
//! ```text
//! upper: D_{p,q} F = -1/(1-p) Σ_s [r·s]_q Ω(s) x^s/(q,q)_s
//! lower: D_{p,q} F = +1/(1-p) Σ_s [r·s]_q Ω(s)|_{p -> qp} x^s/(q,q)_s
//! ```
//!
//! Splitting `[r·s]_q` cyclically over the `K` variables with `r_i > 0`
//! turns each expansion into `K·K` weighted series: for every active
//! variable `k`, the bracket `[r_k s_k]_q` times the cyclic prefix products
//! `q^{r_j s_j}` of lengths `0..K`. Single-index parameters give one term.
//!
//! Two pipelines are exposed: [`eval_derivative_closed`] sums the expansion,
//! [`eval_derivative_definitional`] takes the Jackson difference quotient of
//! two full series evaluations. [`verify`] compares them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::{Block, ParamRef};
use crate::real::Real;
use crate::series::{evaluate, variable_derivative, weighted_evaluate, EvalConfig, SeriesSpec, ShiftState};

/// `|1 - p|` below this is treated as the singular prefactor `1/(1 - p)`.
pub const PREFACTOR_FLOOR: f64 = 1e-12;

/// One term of a closed-form parameter-derivative expansion.
///
/// Its value is
/// `sign / (active_count · (1 - divisor_param)) · Σ_s [r_k s_k]_q Π_{j ∈ prefix} q^{r_j s_j} Ω'(s) x^s/(q,q)_s`
/// where `r = bracket_exponents`, `k = target_var`, and `Ω'` applies the
/// parameter substitutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub sign: i8,
    pub divisor_param: f64,
    pub active_count: usize,
    pub target_var: usize,
    pub bracket_exponents: Vec<f64>,
    pub prefix_shift_vars: Vec<usize>,
    /// `(parameter, q-power)`: the parameter is multiplied by `q^{power}`.
    pub param_substitutions: Vec<(ParamRef, f64)>,
}

impl ExpansionTerm {
    pub fn prefactor(&self) -> f64 {
        f64::from(self.sign) / (self.active_count as f64 * (1.0 - self.divisor_param))
    }

    fn prefactor_in<T: Real>(&self) -> T {
        T::from_f64(f64::from(self.sign))
            / (T::from_u64(self.active_count as u64) * (T::one() - T::from_f64(self.divisor_param)))
    }

    pub fn shift_state(&self) -> ShiftState {
        let mut st = ShiftState::none();
        for &(p, k) in &self.param_substitutions {
            st = st.scale_param(p, k);
        }
        st
    }
}

impl fmt::Display for ExpansionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.sign < 0 { "-" } else { "+" };
        write!(
            f,
            "{sign}1/({}·(1 - {})) · z{k} D_z{k} [bracket row {:?}]",
            self.active_count,
            self.divisor_param,
            self.bracket_exponents,
            k = self.target_var + 1
        )?;
        if !self.prefix_shift_vars.is_empty() {
            let shifts: Vec<String> = self
                .prefix_shift_vars
                .iter()
                .map(|&j| format!("z{} -> q^{} z{}", j + 1, self.bracket_exponents[j], j + 1))
                .collect();
            write!(f, " with {}", shifts.join(", "))?;
        }
        for (p, k) in &self.param_substitutions {
            write!(f, " with {p} -> q^{k}·{p}")?;
        }
        Ok(())
    }
}

fn check_prefactor(spec: &SeriesSpec, p: &ParamRef) -> Result<f64> {
    let value = spec.param_value(p)?;
    if (1.0 - value).abs() < PREFACTOR_FLOOR {
        return Err(Error::SingularPrefactor { param: *p, value });
    }
    Ok(value)
}

/// Symbolic expansion of `D_{p,q} F`. Empty when the parameter has no
/// positive exponent (the series does not depend on it).
pub fn expand_derivative(spec: &SeriesSpec, p: &ParamRef) -> Result<Vec<ExpansionTerm>> {
    let value = check_prefactor(spec, p)?;
    let row = spec.param_row(p)?;
    let upper = p.block.is_upper();
    let sign: i8 = if upper { -1 } else { 1 };
    let substitutions = if upper { vec![] } else { vec![(*p, 1.0)] };

    let active: Vec<usize> = (0..row.len()).filter(|&i| row[i] > 0.0).collect();
    let k = active.len();
    if k == 0 {
        return Ok(Vec::new());
    }

    if p.block.is_single() {
        let var = p.var.expect("single-index reference carries a variable");
        return Ok(vec![ExpansionTerm {
            sign,
            divisor_param: value,
            active_count: 1,
            target_var: var,
            bracket_exponents: row,
            prefix_shift_vars: Vec::new(),
            param_substitutions: substitutions,
        }]);
    }

    let mut terms = Vec::with_capacity(k * k);
    for pos in 0..k {
        for len in 0..k {
            let prefix: Vec<usize> = (1..=len).map(|step| active[(pos + step) % k]).collect();
            terms.push(ExpansionTerm {
                sign,
                divisor_param: value,
                active_count: k,
                target_var: active[pos],
                bracket_exponents: row.clone(),
                prefix_shift_vars: prefix,
                param_substitutions: substitutions.clone(),
            });
        }
    }
    Ok(terms)
}

/// Aggregated convergence diagnostics of a multi-evaluation result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub evaluations: usize,
    pub max_shells: u32,
    pub truncated: bool,
}

impl EvalSummary {
    fn absorb<T>(&mut self, r: &crate::series::EvalResult<T>) {
        self.evaluations += 1;
        self.max_shells = self.max_shells.max(r.shells_used);
        self.truncated |= r.truncated;
    }
}

/// Value of one [`ExpansionTerm`], prefactor included.
pub fn eval_term<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    term: &ExpansionTerm,
    cfg: &EvalConfig,
) -> Result<(T, crate::series::EvalResult<T>)> {
    let shift = term.shift_state();
    let r = weighted_evaluate(
        spec,
        x,
        term.target_var,
        &term.bracket_exponents,
        &term.prefix_shift_vars,
        cfg,
        Some(&shift),
    )?;
    Ok((term.prefactor_in::<T>() * r.value, r))
}

/// Closed-form `D_{p,q} F(x)` summed over the expansion terms.
pub fn eval_derivative_closed<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    p: &ParamRef,
    cfg: &EvalConfig,
) -> Result<(T, EvalSummary)> {
    let terms = expand_derivative(spec, p)?;
    let mut total = T::zero();
    let mut summary = EvalSummary::default();
    for term in &terms {
        let (v, r) = eval_term(spec, x, term, cfg)?;
        total += v;
        summary.absorb(&r);
    }
    Ok((total, summary))
}

/// Definitional `D_{p,q} F(x) = (F|_{p -> qp}(x) - F(x)) / ((q - 1) p)`.
pub fn eval_derivative_definitional<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    p: &ParamRef,
    cfg: &EvalConfig,
) -> Result<(T, EvalSummary)> {
    let value = spec.param_value(p)?;
    if value == 0.0 {
        return Err(Error::ZeroParameter(*p));
    }
    let shifted = ShiftState::none().scale_param(*p, 1.0);
    let hi = evaluate(spec, x, cfg, Some(&shifted))?;
    let lo = evaluate(spec, x, cfg, None)?;
    let mut summary = EvalSummary::default();
    summary.absorb(&hi);
    summary.absorb(&lo);
    let q = spec.base.as_real::<T>();
    let d = (hi.value - lo.value) / ((q - T::one()) * T::from_f64(value));
    Ok((d, summary))
}

/// Literal reading of the single-index formula with a variable shift:
/// `sign/(1-p) · x_i D_{x_i,q} F(q^{φ} x_i)` (plus `p -> qp` for lower
/// parameters). Kept as a differential oracle against the bracket-row
/// emission; the two differ at finite `q` whenever `φ ≠ 0`.
pub fn eval_single_shift_reading<T: Real>(spec: &SeriesSpec, x: &[T], p: &ParamRef, cfg: &EvalConfig) -> Result<T> {
    if !p.block.is_single() {
        return Err(Error::InvalidArgument(format!("{p} is not a single-index parameter")));
    }
    let value = check_prefactor(spec, p)?;
    let var = p.var.expect("single-index reference carries a variable");
    let phi = spec.param_row(p)?[var];
    let mut shift = ShiftState::none().shift_var(spec.n_vars, var, phi);
    let sign = if p.block == Block::UpperSingle {
        -T::one()
    } else {
        shift = shift.scale_param(*p, 1.0);
        T::one()
    };
    let d = variable_derivative(spec, x, var, cfg, Some(&shift))?;
    Ok(sign / (T::one() - T::from_f64(value)) * x[var] * d.value)
}

/// Outcome of comparing the definitional and closed-form pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub param: ParamRef,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

/// Tolerance rule: relative when `|lhs| >= tol`, absolute otherwise.
pub fn within_tolerance(lhs: f64, abs_diff: f64, tol: f64) -> bool {
    if lhs.abs() >= tol {
        abs_diff <= tol * lhs.abs()
    } else {
        abs_diff <= tol
    }
}

/// Runs both pipelines and compares them. Errors become diagnostics and a
/// failed report.
pub fn verify<T: Real>(spec: &SeriesSpec, x: &[T], p: &ParamRef, cfg: &EvalConfig, tol: f64) -> VerifyReport {
    let mut diagnostics = Vec::new();
    let lhs = eval_derivative_definitional(spec, x, p, cfg);
    let rhs = eval_derivative_closed(spec, x, p, cfg);
    let mut note = |label: &str, s: &EvalSummary| {
        if s.truncated {
            diagnostics.push(format!("{label}: truncated at the per-index cap"));
        }
    };
    match (&lhs, &rhs) {
        (Ok((l, ls)), Ok((r, rs))) => {
            note("definitional", ls);
            note("closed form", rs);
            let diff = (*l - *r).abs();
            let abs_diff = diff.to_f64();
            let rel_diff = if *l == T::zero() {
                abs_diff
            } else {
                (diff / l.abs()).to_f64()
            };
            let lhs = l.to_f64();
            let passed = within_tolerance(lhs, abs_diff, tol);
            VerifyReport {
                param: *p,
                lhs,
                rhs: r.to_f64(),
                abs_diff,
                rel_diff,
                tolerance: tol,
                passed,
                diagnostics,
            }
        }
        _ => {
            if let Err(e) = &lhs {
                diagnostics.push(format!("definitional: {e}"));
            }
            if let Err(e) = &rhs {
                diagnostics.push(format!("closed form: {e}"));
            }
            VerifyReport {
                param: *p,
                lhs: lhs.map(|v| v.0.to_f64()).unwrap_or(f64::NAN),
                rhs: rhs.map(|v| v.0.to_f64()).unwrap_or(f64::NAN),
                abs_diff: f64::NAN,
                rel_diff: f64::NAN,
                tolerance: tol,
                passed: false,
                diagnostics,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QBase;

    fn h3() -> SeriesSpec {
        SeriesSpec::new(2, QBase::new(0.5).unwrap())
            .with_upper_multi(0.3, vec![2.0, 1.0])
            .with_upper_single(1, 0.2, 1.0)
            .with_lower_multi(0.7, vec![1.0, 1.0])
    }

    #[test]
    fn upper_single_expansion() {
        let terms = expand_derivative(&h3(), &ParamRef::upper_single(1, 0)).unwrap();
        assert_eq!(terms.len(), 1);
        let t = &terms[0];
        assert_eq!(t.sign, -1);
        assert_eq!(t.target_var, 1);
        assert_eq!(t.bracket_exponents, vec![0.0, 1.0]);
        assert!(t.prefix_shift_vars.is_empty());
        assert!(t.param_substitutions.is_empty());
        assert_eq!(t.prefactor(), -1.0 / 0.8);
    }

    #[test]
    fn upper_multi_expansion_h3() {
        let terms = expand_derivative(&h3(), &ParamRef::upper_multi(0)).unwrap();
        let shape: Vec<(usize, Vec<usize>)> = terms
            .iter()
            .map(|t| (t.target_var, t.prefix_shift_vars.clone()))
            .collect();
        assert_eq!(shape, vec![(0, vec![]), (0, vec![1]), (1, vec![]), (1, vec![0])]);
        for t in &terms {
            assert_eq!(t.sign, -1);
            assert_eq!(t.active_count, 2);
            assert_eq!(t.bracket_exponents, vec![2.0, 1.0]);
            assert_eq!(t.prefactor(), -1.0 / (2.0 * 0.7));
        }
    }

    #[test]
    fn lower_multi_expansion_h3() {
        let p = ParamRef::lower_multi(0);
        let terms = expand_derivative(&h3(), &p).unwrap();
        assert_eq!(terms.len(), 4);
        for t in &terms {
            assert_eq!(t.sign, 1);
            assert_eq!(t.param_substitutions, vec![(p, 1.0)]);
            assert!((t.prefactor() - 1.0 / (2.0 * 0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn inactive_and_singular_parameters() {
        let spec = h3().with_upper_multi(0.4, vec![0.0, 0.0]);
        assert!(expand_derivative(&spec, &ParamRef::upper_multi(1)).unwrap().is_empty());
        let (v, _) =
            eval_derivative_closed::<f64>(&spec, &[0.1, 0.1], &ParamRef::upper_multi(1), &EvalConfig::default())
                .unwrap();
        assert_eq!(v, 0.0);
        let (d, _) =
            eval_derivative_definitional::<f64>(&spec, &[0.1, 0.1], &ParamRef::upper_multi(1), &EvalConfig::default())
                .unwrap();
        assert!(d.abs() < 1e-12);

        let spec = h3().with_upper_single(0, 1.0, 1.0);
        let p = ParamRef::upper_single(0, 0);
        assert!(matches!(
            expand_derivative(&spec, &p),
            Err(Error::SingularPrefactor { .. })
        ));
        let rep = verify::<f64>(&spec, &[0.1, 0.1], &p, &EvalConfig::default(), 1e-9);
        assert!(!rep.passed);
        assert!(
            rep.diagnostics.iter().any(|d| d.contains("too close to 1")),
            "{:?}",
            rep.diagnostics
        );
    }

    #[test]
    fn zero_parameter_rejected_by_difference_quotient() {
        let spec = h3().with_lower_single(0, 0.0, 1.0);
        let p = ParamRef::lower_single(0, 0);
        assert_eq!(
            eval_derivative_definitional::<f64>(&spec, &[0.1, 0.1], &p, &EvalConfig::default()).unwrap_err(),
            Error::ZeroParameter(p)
        );
        // the closed form is still defined there
        assert!(eval_derivative_closed::<f64>(&spec, &[0.1, 0.1], &p, &EvalConfig::default()).is_ok());
    }

    #[test]
    fn h3_pipelines_agree() {
        let cfg = EvalConfig::default();
        for p in h3().param_refs() {
            let rep = verify::<f64>(&h3(), &[0.1, 0.1], &p, &cfg, 1e-9);
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn tolerance_rule() {
        assert!(within_tolerance(1.0, 1e-10, 1e-9));
        assert!(!within_tolerance(1.0, 1e-8, 1e-9));
        assert!(within_tolerance(1e-12, 5e-10, 1e-9));
        assert!(!within_tolerance(1e-12, 5e-9, 1e-9));
    }
}
