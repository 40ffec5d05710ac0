//! Built-in verification suites.
//!
//! * `h3`: the three `H_{q,3}` parameter derivatives, hand-assembled versus
//!   the generic expansion versus the Jackson difference, on a 27-point grid.
//! * `identities`: q-bracket, q-Pochhammer and Jackson-derivative identities
//!   plus the q-exponential and q-binomial product formulas.
//! * `theorems`: randomized series, parameter and point; the definitional
//!   and closed-form derivatives must agree.
//!
//! Cases run in parallel; every case draws from its own seeded stream so the
//! report does not depend on scheduling.

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::deriv::{eval_derivative_closed, eval_derivative_definitional, verify, within_tolerance};
use crate::h3::{h3_deriv_a, h3_deriv_b, h3_deriv_b_shifted, h3_deriv_c, h3_spec, H3Params};
use crate::param::ParamRef;
use crate::qcore::{
    infinite_product, jackson_derivative, q_bracket, q_pochhammer, q_pochhammer_negative_dual, split_q_bracket,
    PochOrder, ProductConfig, QBase,
};
use crate::real::{Extended, Precision, Real};
use crate::report::{verify_record, CaseRecord, RunReport};
use crate::series::{evaluate, EvalConfig, SeriesSpec};

pub const DEFAULT_SEED: u64 = 20180501;
pub const SUITES: [&str; 3] = ["h3", "identities", "theorems"];

/// Number of randomized cases in the `theorems` suite.
pub const THEOREM_CASES: usize = 600;
/// Draws per identity in the `identities` suite.
pub const IDENTITY_DRAWS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown suite \"{0}\" (available: h3, identities, theorems)")]
pub struct UnknownSuite(pub String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Overrides every case's own tolerance.
    pub tol: Option<f64>,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            tol: None,
            seed: DEFAULT_SEED,
            precision: Precision::Double,
        }
    }
}

impl SuiteOptions {
    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

type Case = Box<dyn Fn() -> CaseRecord + Send + Sync>;

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<RunReport, UnknownSuite> {
    let start = Instant::now();
    let cases: Vec<Case> = match (name, opts.precision) {
        ("h3", Precision::Double) => h3_cases::<f64>(opts),
        ("h3", Precision::Extended) => h3_cases::<Extended>(opts),
        ("identities", Precision::Double) => identity_cases::<f64>(opts),
        ("identities", Precision::Extended) => identity_cases::<Extended>(opts),
        ("theorems", Precision::Double) => theorem_cases::<f64>(opts),
        ("theorems", Precision::Extended) => theorem_cases::<Extended>(opts),
        _ => return Err(UnknownSuite(name.to_string())),
    };
    let records: Vec<CaseRecord> = cases.par_iter().map(|c| c()).collect();
    let mut report = RunReport::new(format!("suite {name}"), opts.precision, records);
    if let Some(t) = opts.tol {
        report = report.with_tolerance(t);
    }
    if name != "h3" {
        report = report.with_seed(opts.seed);
    }
    Ok(report.timed_since(start))
}

/// Independent stream for case `index` of a randomized suite.
fn case_rng(seed: u64, salt: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt << 32 | index as u64);
    rng
}

fn compare(case: CaseRecord, lhs: f64, rhs: f64, tol: f64) -> CaseRecord {
    let abs_diff = (lhs - rhs).abs();
    let rel = if lhs == 0.0 { abs_diff } else { abs_diff / lhs.abs() };
    case.value("lhs", lhs)
        .value("rhs", rhs)
        .value("rel_diff", rel)
        .pass_if(within_tolerance(lhs, abs_diff, tol))
}

fn compare_t<T: Real>(case: CaseRecord, lhs: crate::Result<T>, rhs: crate::Result<T>, tol: f64) -> CaseRecord {
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => {
            let abs_diff = (l - r).abs();
            let rel = if l == T::zero() { abs_diff } else { abs_diff / l.abs() };
            case.value("lhs", l.to_f64())
                .value("rhs", r.to_f64())
                .value("rel_diff", rel.to_f64())
                .pass_if(within_tolerance(l.to_f64(), abs_diff.to_f64(), tol))
        }
        (l, r) => {
            let mut case = case;
            if let Err(e) = l {
                case = case.fail(format!("lhs: {e}"));
            }
            if let Err(e) = r {
                case = case.fail(format!("rhs: {e}"));
            }
            case
        }
    }
}

// ---------------------------------------------------------------- h3

const H3_A: f64 = 0.3;
const H3_B: f64 = 0.2;
const H3_C: f64 = 0.7;
const H3_QS: [f64; 3] = [0.2, 0.5, 0.8];
const H3_ZS: [f64; 3] = [-0.15, 0.0, 0.15];

fn h3_cases<T: Real>(opts: &SuiteOptions) -> Vec<Case> {
    let mut cases: Vec<Case> = Vec::new();
    let cfg = EvalConfig::for_precision(T::PRECISION);
    let tol_grid = opts.tol_or(1e-8);
    let tol_struct = opts.tol_or(1e-12);
    for (qi, &q) in H3_QS.iter().enumerate() {
        for (i1, &z1) in H3_ZS.iter().enumerate() {
            for (i2, &z2) in H3_ZS.iter().enumerate() {
                for which in ["a", "b", "c"] {
                    let id = format!("h3/grid/{qi}{i1}{i2}/{which}");
                    cases.push(Box::new(move || {
                        let p = H3Params::new(H3_A, H3_B, H3_C, q).expect("valid base");
                        let spec = h3_spec(&p);
                        let z = [T::from_f64(z1), T::from_f64(z2)];
                        let (param, hand) = match which {
                            "a" => (H3Params::param_a(), h3_deriv_a(&p, &z, &cfg)),
                            "b" => (H3Params::param_b(), h3_deriv_b(&p, &z, &cfg)),
                            _ => (H3Params::param_c(), h3_deriv_c(&p, &z, &cfg)),
                        };
                        let inputs = json!({ "h3": p, "z": [z1, z2], "param": param, "config": cfg });
                        let case = CaseRecord::new(id.clone(), "h3-definitional", &inputs);
                        let lhs = eval_derivative_definitional(&spec, &z, &param, &cfg).map(|v| v.0);
                        let case = compare_t(case, lhs, hand.clone(), tol_grid);
                        // hand-assembled formula against the generic expansion
                        let generic = eval_derivative_closed(&spec, &z, &param, &cfg).map(|v| v.0);
                        let check = compare_t(CaseRecord::new("", "", &inputs), hand, generic, tol_struct);
                        let case = case.value(
                            "generic_rel_diff",
                            check.values.get("rel_diff").copied().unwrap_or(f64::NAN),
                        );
                        if check.passed {
                            case
                        } else {
                            case.fail("hand-assembled formula differs from the generic expansion")
                        }
                    }));
                }
            }
        }
    }
    // the printed b-derivative carries no shift on z_2; the shifted reading
    // of the single-index formula must not match the definitional value
    cases.push(Box::new(move || {
        let p = H3Params::new(H3_A, H3_B, H3_C, 0.5).expect("valid base");
        let z = [T::from_f64(0.1), T::from_f64(0.1)];
        let inputs = json!({ "h3": p, "z": [0.1, 0.1], "config": cfg });
        let case = CaseRecord::new("h3/b-shift-reading", "h3-regression", &inputs);
        let lhs = eval_derivative_definitional(&h3_spec(&p), &z, &H3Params::param_b(), &cfg).map(|v| v.0);
        let (Ok(lhs), Ok(plain), Ok(shifted)) = (lhs, h3_deriv_b(&p, &z, &cfg), h3_deriv_b_shifted(&p, &z, &cfg))
        else {
            return case.fail("evaluation failed");
        };
        let (lhs, plain, shifted) = (lhs.to_f64(), plain.to_f64(), shifted.to_f64());
        let shift_rel = (shifted - lhs).abs() / lhs.abs();
        let case = compare(case, lhs, plain, tol_grid)
            .value("shifted", shifted)
            .value("shifted_rel_diff", shift_rel);
        if shift_rel > 1e-6 {
            case
        } else {
            case.fail("shifted reading unexpectedly matches the definitional derivative")
        }
    }));
    cases
}

// ---------------------------------------------------------------- identities

fn pick_q(rng: &mut ChaCha8Rng) -> QBase {
    QBase::new(*[0.2, 0.5, 0.8].choose(rng).expect("nonempty")).expect("valid base")
}

fn identity_cases<T: Real>(opts: &SuiteOptions) -> Vec<Case> {
    let mut cases: Vec<Case> = Vec::new();
    let seed = opts.seed;
    let opts = *opts;
    let eps = if T::PRECISION == Precision::Extended {
        1e-34
    } else {
        1e-17
    };
    for i in 0..IDENTITY_DRAWS {
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 1, i);
            let k = rng.random_range(1..=5usize);
            let theta: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..3.0)).collect();
            let m: Vec<u64> = (0..k).map(|_| rng.random_range(0..=10)).collect();
            let base = pick_q(&mut rng);
            let inputs = json!({ "theta": theta, "m": m, "q": base });
            let case = CaseRecord::new(format!("identities/split/{i:03}"), "split", &inputs);
            let tt: Vec<T> = theta.iter().map(|&v| T::from_f64(v)).collect();
            let dot = theta
                .iter()
                .zip(&m)
                .map(|(t, &mi)| T::from_f64(*t) * T::from_u64(mi))
                .sum::<T>();
            let lhs = split_q_bracket(&tt, &m, base).map(|c| c.iter().map(|c| c.weight * c.bracket).sum::<T>());
            compare_t(case, lhs, Ok(q_bracket(dot, base)), opts.tol_or(1e-12))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 2, i);
            let a = rng.random_range(-2.0..2.0);
            let n = rng.random_range(0..40u64);
            let base = pick_q(&mut rng);
            let inputs = json!({ "a": a, "n": n, "q": base });
            let case = CaseRecord::new(format!("identities/telescoping/{i:03}"), "pochhammer", &inputs);
            let at = T::from_f64(a);
            let lhs = q_pochhammer(at, base, PochOrder::NonNegInt(n + 1), eps);
            let rhs = q_pochhammer(at, base, PochOrder::NonNegInt(n), eps)
                .map(|p| p * (T::one() - at * base.as_real::<T>().powi(n as i32)));
            compare_t(case, lhs, rhs, opts.tol_or(1e-12))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 3, i);
            let a = rng.random_range(0.05..0.95) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let n = rng.random_range(1..12u64);
            let base = pick_q(&mut rng);
            let inputs = json!({ "a": a, "n": n, "q": base });
            let case = CaseRecord::new(format!("identities/negative-order/{i:03}"), "pochhammer", &inputs);
            let at = T::from_f64(a);
            let neg = q_pochhammer(at, base, PochOrder::NegInt(n), eps);
            let dual = q_pochhammer_negative_dual(at, base, n);
            let shifted = at * base.as_real::<T>().powi(-(n as i32));
            let inverse = q_pochhammer(shifted, base, PochOrder::NonNegInt(n), eps);
            let product = match (neg.clone(), inverse) {
                (Ok(p), Ok(i)) => Ok(p * i),
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            let case = compare_t(case, neg, dual, opts.tol_or(1e-12));
            let check = compare_t(
                CaseRecord::new("", "", &inputs),
                Ok(T::one()),
                product,
                opts.tol_or(1e-12),
            );
            if check.passed {
                case
            } else {
                case.fail("(a,q)_{-n} (a q^{-n},q)_n differs from 1")
            }
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 4, i);
            let a = rng.random_range(-0.95..0.95);
            let n = rng.random_range(0..=20u64);
            let base = pick_q(&mut rng);
            let inputs = json!({ "a": a, "n": n, "q": base });
            let case = CaseRecord::new(format!("identities/real-order/{i:03}"), "pochhammer", &inputs);
            let at = T::from_f64(a);
            let real = q_pochhammer(at, base, PochOrder::Real(n as f64), eps);
            let int = q_pochhammer(at, base, PochOrder::NonNegInt(n), eps);
            compare_t(case, real, int, opts.tol_or(1e-10))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 5, i);
            let a = rng.random_range(-3.0..3.0);
            let b = rng.random_range(-3.0..3.0);
            let base = pick_q(&mut rng);
            let inputs = json!({ "a": a, "b": b, "q": base });
            let case = CaseRecord::new(format!("identities/bracket-additivity/{i:03}"), "bracket", &inputs);
            let (at, bt) = (T::from_f64(a), T::from_f64(b));
            let q = base.as_real::<T>();
            let rhs = q_bracket(at, base) + q.powf(at) * q_bracket(bt, base);
            compare_t(case, Ok(q_bracket(at + bt, base)), Ok(rhs), opts.tol_or(1e-12))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 6, i);
            // g has positive coefficients and x > 0, so g(x), g(qx) > 0
            let f: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let x = rng.random_range(0.1..1.5);
            let base = pick_q(&mut rng);
            let inputs = json!({ "f": f, "g": g, "x": x, "q": base });
            let case = CaseRecord::new(format!("identities/jackson-quotient/{i:03}"), "jackson", &inputs);
            let poly = |c: &[f64], x: T| c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::from_f64(ci));
            let (fp, gp) = (|x: T| poly(&f, x), |x: T| poly(&g, x));
            let xt = T::from_f64(x);
            let q = base.as_real::<T>();
            let lhs = jackson_derivative(|x| fp(x) / gp(x), xt, base);
            let rhs = match (jackson_derivative(fp, xt, base), jackson_derivative(gp, xt, base)) {
                (Ok(df), Ok(dg)) => Ok((gp(xt) * df - fp(xt) * dg) / (gp(q * xt) * gp(xt))),
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            compare_t(case, lhs, rhs, opts.tol_or(1e-10))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 7, i);
            let x = rng.random_range(-0.5..0.5);
            let base = pick_q(&mut rng);
            let cfg = EvalConfig::for_precision(T::PRECISION);
            let inputs = json!({ "x": x, "q": base, "config": cfg });
            let case = CaseRecord::new(format!("identities/q-exponential/{i:03}"), "series", &inputs);
            let spec = SeriesSpec::new(1, base);
            let lhs = evaluate(&spec, &[T::from_f64(x)], &cfg, None).map(|r| r.value);
            let rhs = infinite_product(T::from_f64(x), base, &ProductConfig::with_eps(eps)).map(|p| T::one() / p);
            compare_t(case, lhs, rhs, opts.tol_or(1e-12))
        }));
        cases.push(Box::new(move || {
            let mut rng = case_rng(seed, 8, i);
            let x = rng.random_range(-0.5..0.5);
            let a = rng.random_range(-0.9..0.9);
            let base = pick_q(&mut rng);
            let cfg = EvalConfig::for_precision(T::PRECISION);
            let inputs = json!({ "a": a, "x": x, "q": base, "config": cfg });
            let case = CaseRecord::new(format!("identities/q-binomial/{i:03}"), "series", &inputs);
            let spec = SeriesSpec::new(1, base).with_upper_single(0, a, 1.0);
            let xt = T::from_f64(x);
            let lhs = evaluate(&spec, &[xt], &cfg, None).map(|r| r.value);
            let pc = ProductConfig::with_eps(eps);
            let rhs = match (
                infinite_product(T::from_f64(a) * xt, base, &pc),
                infinite_product(xt, base, &pc),
            ) {
                (Ok(n), Ok(d)) => Ok(n / d),
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            compare_t(case, lhs, rhs, opts.tol_or(1e-12))
        }));
    }
    cases
}

// ---------------------------------------------------------------- theorems

/// One randomized theorem check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TheoremCase {
    pub spec: SeriesSpec,
    pub param: ParamRef,
    pub x: Vec<f64>,
}

const EXPONENTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

fn param_value(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(0.05..0.9);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Draws a series with `n <= 3` variables, at most two parameters per
/// block, exponents in `{0, 1/2, 1, 2}`, parameter values with
/// `0.05 <= |p| < 0.9`, `q ∈ {0.2, 0.5, 0.8}` and `|x_i| <= 0.2`, then one
/// of its parameters.
pub fn random_theorem_case(rng: &mut ChaCha8Rng) -> TheoremCase {
    loop {
        let n = rng.random_range(1..=3usize);
        let base = pick_q(rng);
        let mut spec = SeriesSpec::new(n, base);
        for _ in 0..rng.random_range(0..=2) {
            let row = (0..n).map(|_| *EXPONENTS.choose(rng).expect("nonempty")).collect();
            spec = spec.with_upper_multi(param_value(rng), row);
        }
        for _ in 0..rng.random_range(0..=2) {
            let row = (0..n).map(|_| *EXPONENTS.choose(rng).expect("nonempty")).collect();
            spec = spec.with_lower_multi(param_value(rng), row);
        }
        for _ in 0..rng.random_range(0..=2) {
            let var = rng.random_range(0..n);
            let e = *EXPONENTS.choose(rng).expect("nonempty");
            spec = spec.with_upper_single(var, param_value(rng), e);
        }
        for _ in 0..rng.random_range(0..=2) {
            let var = rng.random_range(0..n);
            let e = *EXPONENTS.choose(rng).expect("nonempty");
            spec = spec.with_lower_single(var, param_value(rng), e);
        }
        let params = spec.param_refs();
        let Some(&param) = params.choose(rng) else {
            continue;
        };
        let x = (0..n).map(|_| rng.random_range(-0.2..=0.2)).collect();
        return TheoremCase { spec, param, x };
    }
}

fn theorem_cases<T: Real>(opts: &SuiteOptions) -> Vec<Case> {
    let seed = opts.seed;
    let tol = opts.tol_or(1e-8);
    (0..THEOREM_CASES)
        .map(|i| -> Case {
            Box::new(move || {
                let tc = random_theorem_case(&mut case_rng(seed, 9, i));
                let cfg = EvalConfig::for_precision(T::PRECISION);
                let inputs = json!({ "case": tc, "config": cfg, "tol": tol });
                let case = CaseRecord::new(format!("theorems/{i:04}/{}", tc.param), "verify", &inputs);
                let x: Vec<T> = tc.x.iter().map(|&v| T::from_f64(v)).collect();
                verify_record(case, &verify(&tc.spec, &x, &tc.param, &cfg, tol))
            })
        })
        .collect()
}
