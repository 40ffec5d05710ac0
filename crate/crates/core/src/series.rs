//! The q-extended Srivastava–Daoust series in `n` variables.
//!
//! ```text
//! F(x_1, …, x_n) = Σ_{s ∈ ℕ^n} Ω(s) Π_i x_i^{s_i} / (q, q)_{s_i}
//!
//! Ω(s) = Π_j (a_j, q)_{θ_j·s} Π_i Π_j (b_j^{(i)}, q)_{φ_j^{(i)} s_i}
//!      / Π_j (c_j, q)_{ψ_j·s} Π_i Π_j (d_j^{(i)}, q)_{δ_j^{(i)} s_i}
//! ```
//!
//! Summation runs over shells of constant total degree `|s|`, in
//! lexicographic order inside a shell, and stops once `shell_stall`
//! consecutive shells are negligible relative to the running sum.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::{Block, ParamRef};
use crate::qcore::{finite_product, q_bracket, real_order_pochhammer, ProductConfig, QBase};
use crate::real::{Precision, Real};

/// Number of consecutive growing shells after which a sum is declared divergent.
pub const GROWTH_LIMIT: usize = 5;

/// Growth is only counted once the slowest q-power in the term has dropped
/// below this; before that the Pochhammer factors themselves can make a
/// convergent series grow for many shells.
const WARMUP_Q_POWER: f64 = 1e-2;

/// Largest integer order routed through the cached finite product.
const MAX_INTEGER_ORDER: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiParam {
    pub value: f64,
    pub exponents: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleParam {
    pub value: f64,
    pub exponent: f64,
}

/// Full descriptor of one series: base, variable count and the four
/// parameter blocks with their exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub n_vars: usize,
    #[serde(rename = "q")]
    pub base: QBase,
    #[serde(default)]
    pub upper_multi: Vec<MultiParam>,
    #[serde(default)]
    pub lower_multi: Vec<MultiParam>,
    /// One list per variable.
    #[serde(default)]
    pub upper_single: Vec<Vec<SingleParam>>,
    /// One list per variable.
    #[serde(default)]
    pub lower_single: Vec<Vec<SingleParam>>,
}

impl SeriesSpec {
    /// A series with no parameters: `Π_i 1/(x_i, q)_∞`.
    pub fn new(n_vars: usize, base: QBase) -> Self {
        SeriesSpec {
            n_vars,
            base,
            upper_multi: Vec::new(),
            lower_multi: Vec::new(),
            upper_single: vec![Vec::new(); n_vars],
            lower_single: vec![Vec::new(); n_vars],
        }
    }

    pub fn with_upper_multi(mut self, value: f64, exponents: Vec<f64>) -> Self {
        self.upper_multi.push(MultiParam { value, exponents });
        self
    }

    pub fn with_lower_multi(mut self, value: f64, exponents: Vec<f64>) -> Self {
        self.lower_multi.push(MultiParam { value, exponents });
        self
    }

    pub fn with_upper_single(mut self, var: usize, value: f64, exponent: f64) -> Self {
        self.pad_single_blocks();
        self.upper_single[var].push(SingleParam { value, exponent });
        self
    }

    pub fn with_lower_single(mut self, var: usize, value: f64, exponent: f64) -> Self {
        self.pad_single_blocks();
        self.lower_single[var].push(SingleParam { value, exponent });
        self
    }

    /// Expands omitted (empty) single-index blocks to one empty list per
    /// variable. Used after deserialization.
    pub fn pad_single_blocks(&mut self) {
        if self.upper_single.is_empty() {
            self.upper_single = vec![Vec::new(); self.n_vars];
        }
        if self.lower_single.is_empty() {
            self.lower_single = vec![Vec::new(); self.n_vars];
        }
    }

    /// Every parameter of the series, block by block.
    pub fn param_refs(&self) -> Vec<ParamRef> {
        let mut out: Vec<ParamRef> = (0..self.upper_multi.len()).map(ParamRef::upper_multi).collect();
        out.extend((0..self.lower_multi.len()).map(ParamRef::lower_multi));
        for (i, list) in self.upper_single.iter().enumerate() {
            out.extend((0..list.len()).map(|j| ParamRef::upper_single(i, j)));
        }
        for (i, list) in self.lower_single.iter().enumerate() {
            out.extend((0..list.len()).map(|j| ParamRef::lower_single(i, j)));
        }
        out
    }

    pub fn param_value(&self, p: &ParamRef) -> Result<f64> {
        if !p.is_well_formed() {
            return Err(Error::UnknownParameter(*p));
        }
        let v = match p.block {
            Block::UpperMulti => self.upper_multi.get(p.j).map(|m| m.value),
            Block::LowerMulti => self.lower_multi.get(p.j).map(|m| m.value),
            Block::UpperSingle => p
                .var
                .and_then(|i| self.upper_single.get(i))
                .and_then(|l| l.get(p.j))
                .map(|s| s.value),
            Block::LowerSingle => p
                .var
                .and_then(|i| self.lower_single.get(i))
                .and_then(|l| l.get(p.j))
                .map(|s| s.value),
        };
        v.ok_or(Error::UnknownParameter(*p))
    }

    /// Exponent row of a parameter as an `n`-vector: `θ_j` / `ψ_j` for
    /// multi-index parameters, `φ e_i` / `δ e_i` for single-index ones.
    pub fn param_row(&self, p: &ParamRef) -> Result<Vec<f64>> {
        self.param_value(p)?;
        Ok(match p.block {
            Block::UpperMulti => self.upper_multi[p.j].exponents.clone(),
            Block::LowerMulti => self.lower_multi[p.j].exponents.clone(),
            Block::UpperSingle | Block::LowerSingle => {
                let i = p.var.expect("checked by param_value");
                let list = if p.block == Block::UpperSingle {
                    &self.upper_single[i]
                } else {
                    &self.lower_single[i]
                };
                let mut row = vec![0.0; self.n_vars];
                row[i] = list[p.j].exponent;
                row
            }
        })
    }

    fn structural_diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.n_vars;
        if n == 0 {
            out.push(Diagnostic::ZeroVariables);
        }
        let check_value = |what: String, v: f64, out: &mut Vec<Diagnostic>| {
            if !v.is_finite() {
                out.push(Diagnostic::NonFiniteValue { what });
            }
        };
        for (name, block) in [("upper_multi", &self.upper_multi), ("lower_multi", &self.lower_multi)] {
            for (j, p) in block.iter().enumerate() {
                let what = format!("{name}[{j}]");
                check_value(format!("{what}.value"), p.value, &mut out);
                if p.exponents.len() != n {
                    out.push(Diagnostic::DimensionMismatch {
                        what: format!("{what}.exponents"),
                        expected: n,
                        found: p.exponents.len(),
                    });
                }
                for (i, &e) in p.exponents.iter().enumerate() {
                    if !(e >= 0.0) || !e.is_finite() {
                        out.push(Diagnostic::NegativeExponent {
                            what: format!("{what}.exponents[{i}]"),
                            value: e,
                        });
                    }
                }
            }
        }
        for (name, block) in [
            ("upper_single", &self.upper_single),
            ("lower_single", &self.lower_single),
        ] {
            if block.len() != n {
                out.push(Diagnostic::DimensionMismatch {
                    what: name.to_string(),
                    expected: n,
                    found: block.len(),
                });
            }
            for (i, list) in block.iter().enumerate() {
                for (j, p) in list.iter().enumerate() {
                    let what = format!("{name}[{i}][{j}]");
                    check_value(format!("{what}.value"), p.value, &mut out);
                    if !(p.exponent >= 0.0) || !p.exponent.is_finite() {
                        out.push(Diagnostic::NegativeExponent {
                            what: format!("{what}.exponent"),
                            value: p.exponent,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Summation multi-index `s = (s_1, …, s_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Truncation and tolerance policy for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// A shell is negligible when its absolute magnitude is at most
    /// `eps_term · |accumulated sum|`.
    pub eps_term: f64,
    pub n_max_per_index: u32,
    pub eps_prod: f64,
    pub shell_stall: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            eps_term: 1e-16,
            n_max_per_index: 200,
            eps_prod: 1e-17,
            shell_stall: 3,
        }
    }
}

impl EvalConfig {
    /// Defaults tightened to the unit roundoff of the given precision.
    pub fn for_precision(p: Precision) -> Self {
        match p {
            Precision::Double => EvalConfig::default(),
            Precision::Extended => EvalConfig {
                eps_term: 1e-32,
                eps_prod: 1e-34,
                ..EvalConfig::default()
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.eps_term > 0.0 && self.eps_prod > 0.0 && self.n_max_per_index > 0 && self.shell_stall > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "evaluation config must be positive: {self:?}"
            )))
        }
    }

    pub fn product_config(&self) -> ProductConfig {
        ProductConfig::with_eps(self.eps_prod)
    }
}

/// Value of a truncated sum together with its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult<T> {
    pub value: T,
    pub shells_used: u32,
    pub last_shell_magnitude: T,
    /// The per-index cap was reached before the stall criterion held.
    pub truncated: bool,
}

impl<T: Real> EvalResult<T> {
    pub fn to_f64(self) -> EvalResult<f64> {
        EvalResult {
            value: self.value.to_f64(),
            shells_used: self.shells_used,
            last_shell_magnitude: self.last_shell_magnitude.to_f64(),
            truncated: self.truncated,
        }
    }
}

/// Replacement of one parameter value during a shifted evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideValue {
    Set(f64),
    /// `p -> q^k · p`, computed in working precision.
    ScaleByQPower(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamOverride {
    pub param: ParamRef,
    pub value: OverrideValue,
}

/// Variable multipliers `x_i -> q^{σ_i} x_i` and parameter replacements
/// applied on top of a [`SeriesSpec`] without mutating it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftState {
    /// Empty means no variable shift.
    pub q_power_shifts: Vec<f64>,
    pub param_overrides: Vec<ParamOverride>,
}

impl ShiftState {
    pub fn none() -> Self {
        ShiftState::default()
    }

    pub fn shift_var(mut self, n_vars: usize, var: usize, q_power: f64) -> Self {
        if self.q_power_shifts.is_empty() {
            self.q_power_shifts = vec![0.0; n_vars];
        }
        self.q_power_shifts[var] += q_power;
        self
    }

    pub fn scale_param(mut self, param: ParamRef, q_power: f64) -> Self {
        self.param_overrides.push(ParamOverride {
            param,
            value: OverrideValue::ScaleByQPower(q_power),
        });
        self
    }

    pub fn set_param(mut self, param: ParamRef, value: f64) -> Self {
        self.param_overrides.push(ParamOverride {
            param,
            value: OverrideValue::Set(value),
        });
        self
    }
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    ZeroVariables,
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    NegativeExponent {
        what: String,
        value: f64,
    },
    NonFiniteValue {
        what: String,
    },
    /// A lower parameter sits on the pole lattice `q^{-k}` and the pole is
    /// reached inside the truncation window.
    SingularLowerParameter {
        param: ParamRef,
        value: f64,
        pole_order: f64,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::ZeroVariables => write!(f, "series needs at least one variable"),
            Diagnostic::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            Diagnostic::NegativeExponent { what, value } => {
                write!(f, "{what}: exponent {value} must be a finite non-negative real")
            }
            Diagnostic::NonFiniteValue { what } => write!(f, "{what}: value is not finite"),
            Diagnostic::SingularLowerParameter {
                param,
                value,
                pole_order,
            } => write!(
                f,
                "{param} = {value} makes a denominator Pochhammer vanish (factor 1 - p q^{pole_order})"
            ),
        }
    }
}

/// Checks structure and looks for vanishing denominator Pochhammers inside
/// the `n_max_per_index` window. An empty list means the spec is usable.
pub fn validate(spec: &SeriesSpec, cfg: &EvalConfig) -> Vec<Diagnostic> {
    let mut out = spec.structural_diagnostics();
    if !out.is_empty() {
        return out;
    }
    let q = spec.base.get();
    let n_max = cfg.n_max_per_index;
    for (j, p) in spec.lower_multi.iter().enumerate() {
        let steps: Vec<f64> = p.exponents.iter().copied().filter(|&e| e > 0.0).collect();
        if let Some(k) = pole_order(p.value, q) {
            if lattice_hits(k, &steps, n_max) {
                out.push(Diagnostic::SingularLowerParameter {
                    param: ParamRef::lower_multi(j),
                    value: p.value,
                    pole_order: k,
                });
            }
        }
    }
    for (i, list) in spec.lower_single.iter().enumerate() {
        for (j, p) in list.iter().enumerate() {
            if let Some(k) = pole_order(p.value, q) {
                let steps: Vec<f64> = if p.exponent > 0.0 { vec![p.exponent] } else { vec![] };
                if lattice_hits(k, &steps, n_max) {
                    out.push(Diagnostic::SingularLowerParameter {
                        param: ParamRef::lower_single(i, j),
                        value: p.value,
                        pole_order: k,
                    });
                }
            }
        }
    }
    out
}

/// `k >= 0` with `c = q^{-k}`, if `c` lies on the positive pole ray.
fn pole_order(c: f64, q: f64) -> Option<f64> {
    if !(c > 0.0) {
        return None;
    }
    let k = -c.ln() / q.ln();
    // c < 1 gives k < 0; every factor 1 - c q^m is then positive
    if k < -1e-12 {
        None
    } else {
        Some(k.max(0.0))
    }
}

/// Whether some reachable order `N = Σ_i steps_i s_i` (each `s_i <= n_max`)
/// makes `(q^{-k}, q)_N` vanish. Integer orders use the finite product, whose
/// factors are `1 - c q^m` for `m < N`. Non-integer orders use the ratio form,
/// which vanishes when `k` is an integer (numerator) or when `k - N` is a
/// non-negative integer (denominator).
fn lattice_hits(k: f64, steps: &[f64], n_max: u32) -> bool {
    const TOL: f64 = 1e-9;
    const MAX_NODES: usize = 200_000;
    if steps.is_empty() {
        return false;
    }
    let is_int = |v: f64| (v - v.round()).abs() < TOL;
    let max_order: f64 = steps.iter().map(|s| s * f64::from(n_max)).sum();
    if is_int(k) {
        // any non-integer step is itself a reachable non-integer order
        return !steps.iter().all(|&s| is_int(s)) || max_order > k + TOL;
    }
    let key = |v: f64| (v / TOL).round() as i64;
    let mut seen = std::collections::HashSet::new();
    let mut frontier = vec![0.0f64];
    seen.insert(key(0.0));
    while let Some(order) = frontier.pop() {
        if !is_int(order) && is_int(k - order) {
            return true;
        }
        for &s in steps {
            let next = order + s;
            if next <= k + TOL && next <= max_order + TOL && seen.len() < MAX_NODES && seen.insert(key(next)) {
                frontier.push(next);
            }
        }
    }
    false
}

/// Ω(s) computed from scratch, each Pochhammer evaluated independently.
pub fn omega<T: Real>(spec: &SeriesSpec, s: &MultiIndex) -> Result<T> {
    omega_with(spec, s, &ProductConfig::default())
}

pub fn omega_with<T: Real>(spec: &SeriesSpec, s: &MultiIndex, pcfg: &ProductConfig) -> Result<T> {
    let diags = spec.structural_diagnostics();
    if !diags.is_empty() {
        return Err(Error::InvalidSpec(diags));
    }
    if s.0.len() != spec.n_vars {
        return Err(Error::DimensionMismatch {
            what: "multi-index".into(),
            expected: spec.n_vars,
            found: s.0.len(),
        });
    }
    let base = spec.base;
    let poch = |a: f64, order: f64| -> Result<T> {
        if order.fract() == 0.0 && order <= MAX_INTEGER_ORDER {
            Ok(finite_product(T::from_f64(a), base, order as u64))
        } else {
            real_order_pochhammer(T::from_f64(a), base, T::from_f64(order), pcfg)
        }
    };
    let dot = |row: &[f64]| -> f64 { row.iter().zip(&s.0).map(|(e, &si)| e * f64::from(si)).sum() };
    let mut num = T::one();
    let mut den = T::one();
    for p in &spec.upper_multi {
        num *= poch(p.value, dot(&p.exponents))?;
    }
    for p in &spec.lower_multi {
        den *= poch(p.value, dot(&p.exponents))?;
    }
    for (i, list) in spec.upper_single.iter().enumerate() {
        for p in list {
            num *= poch(p.value, p.exponent * f64::from(s.0[i]))?;
        }
    }
    for (i, list) in spec.lower_single.iter().enumerate() {
        for p in list {
            den *= poch(p.value, p.exponent * f64::from(s.0[i]))?;
        }
    }
    if den.abs() < T::from_f64(pcfg.singularity_floor) {
        return Err(Error::SingularPochhammer {
            a: f64::NAN,
            order: format!("Ω{:?} denominator", s.0),
        });
    }
    Ok(num / den)
}

/// Memoized `(a, q)_N` for one parameter.
struct PochTable<T> {
    a: T,
    /// `prefix[n] = (a, q)_n`
    prefix: Vec<T>,
    next_aqn: T,
    real: HashMap<u64, T>,
}

impl<T: Real> PochTable<T> {
    fn new(a: T) -> Self {
        PochTable {
            a,
            prefix: vec![T::one()],
            next_aqn: a,
            real: HashMap::new(),
        }
    }

    fn get(&mut self, order: f64, q: T, base: QBase, pcfg: &ProductConfig) -> Result<T> {
        if order.fract() == 0.0 && order <= MAX_INTEGER_ORDER {
            let n = order as usize;
            while self.prefix.len() <= n {
                let last = *self.prefix.last().expect("prefix starts non-empty");
                self.prefix.push(last * (T::one() - self.next_aqn));
                self.next_aqn *= q;
            }
            return Ok(self.prefix[n]);
        }
        let key = order.to_bits();
        if let Some(v) = self.real.get(&key) {
            return Ok(*v);
        }
        let v = real_order_pochhammer(self.a, base, T::from_f64(order), pcfg)?;
        self.real.insert(key, v);
        Ok(v)
    }
}

struct MultiEntry<T> {
    exponents: Vec<f64>,
    table: PochTable<T>,
}

struct SingleEntry<T> {
    exponent: f64,
    table: PochTable<T>,
}

/// Per-evaluation term generator with Pochhammer, factorial and power caches.
struct TermEngine<T> {
    n: usize,
    base: QBase,
    q: T,
    pcfg: ProductConfig,
    upper_multi: Vec<MultiEntry<T>>,
    lower_multi: Vec<MultiEntry<T>>,
    upper_single: Vec<Vec<SingleEntry<T>>>,
    lower_single: Vec<Vec<SingleEntry<T>>>,
    /// `(q, q)_s`
    qfact: Vec<T>,
    /// effective variables `q^{σ_i} x_i`
    xs: Vec<T>,
    xpow: Vec<Vec<T>>,
    /// shells before growth counts toward divergence
    warmup: u32,
}

fn resolve_value<T: Real>(spec: &SeriesSpec, shift: &ShiftState, p: ParamRef, q: T) -> Result<T> {
    let mut v = T::from_f64(spec.param_value(&p)?);
    for o in shift.param_overrides.iter().filter(|o| o.param == p) {
        v = match o.value {
            OverrideValue::Set(x) => T::from_f64(x),
            OverrideValue::ScaleByQPower(k) => v * q.powf(T::from_f64(k)),
        };
    }
    Ok(v)
}

impl<T: Real> TermEngine<T> {
    fn new(spec: &SeriesSpec, x: &[T], cfg: &EvalConfig, shift: &ShiftState) -> Result<Self> {
        cfg.check()?;
        let diags = spec.structural_diagnostics();
        if !diags.is_empty() {
            return Err(Error::InvalidSpec(diags));
        }
        let n = spec.n_vars;
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                what: "evaluation point".into(),
                expected: n,
                found: x.len(),
            });
        }
        if !shift.q_power_shifts.is_empty() && shift.q_power_shifts.len() != n {
            return Err(Error::DimensionMismatch {
                what: "q-power shifts".into(),
                expected: n,
                found: shift.q_power_shifts.len(),
            });
        }
        for o in &shift.param_overrides {
            spec.param_value(&o.param)?;
        }
        let base = spec.base;
        let q = base.as_real::<T>();
        let xs: Vec<T> = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| match shift.q_power_shifts.get(i) {
                Some(&sigma) if sigma != 0.0 => xi * q.powf(T::from_f64(sigma)),
                _ => xi,
            })
            .collect();

        let multi = |block: &[MultiParam], mk: fn(usize) -> ParamRef| -> Result<Vec<MultiEntry<T>>> {
            block
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    Ok(MultiEntry {
                        exponents: p.exponents.clone(),
                        table: PochTable::new(resolve_value(spec, shift, mk(j), q)?),
                    })
                })
                .collect()
        };
        let single =
            |blocks: &[Vec<SingleParam>], mk: fn(usize, usize) -> ParamRef| -> Result<Vec<Vec<SingleEntry<T>>>> {
                blocks
                    .iter()
                    .enumerate()
                    .map(|(i, list)| {
                        list.iter()
                            .enumerate()
                            .map(|(j, p)| {
                                Ok(SingleEntry {
                                    exponent: p.exponent,
                                    table: PochTable::new(resolve_value(spec, shift, mk(i, j), q)?),
                                })
                            })
                            .collect()
                    })
                    .collect()
            };

        Ok(TermEngine {
            n,
            base,
            q,
            pcfg: cfg.product_config(),
            upper_multi: multi(&spec.upper_multi, ParamRef::upper_multi)?,
            lower_multi: multi(&spec.lower_multi, ParamRef::lower_multi)?,
            upper_single: single(&spec.upper_single, ParamRef::upper_single)?,
            lower_single: single(&spec.lower_single, ParamRef::lower_single)?,
            qfact: vec![T::one()],
            xpow: vec![vec![T::one()]; n],
            xs,
            warmup: warmup_shells(spec),
        })
    }

    fn qfact(&mut self, s: usize) -> T {
        while self.qfact.len() <= s {
            let m = self.qfact.len();
            let last = self.qfact[m - 1];
            self.qfact.push(last * (T::one() - self.q.powi(m as i32)));
        }
        self.qfact[s]
    }

    fn xpow(&mut self, i: usize, s: usize) -> T {
        let row = &mut self.xpow[i];
        while row.len() <= s {
            let last = *row.last().expect("non-empty");
            row.push(last * self.xs[i]);
        }
        row[s]
    }

    fn omega(&mut self, s: &[u32]) -> Result<T> {
        let (q, base, pcfg) = (self.q, self.base, self.pcfg);
        let dot = |row: &[f64]| -> f64 { row.iter().zip(s).map(|(e, &si)| e * f64::from(si)).sum() };
        let mut num = T::one();
        let mut den = T::one();
        for e in &mut self.upper_multi {
            num *= e.table.get(dot(&e.exponents), q, base, &pcfg)?;
        }
        for e in &mut self.lower_multi {
            den *= e.table.get(dot(&e.exponents), q, base, &pcfg)?;
        }
        for (i, list) in self.upper_single.iter_mut().enumerate() {
            for e in list {
                num *= e.table.get(e.exponent * f64::from(s[i]), q, base, &pcfg)?;
            }
        }
        for (i, list) in self.lower_single.iter_mut().enumerate() {
            for e in list {
                den *= e.table.get(e.exponent * f64::from(s[i]), q, base, &pcfg)?;
            }
        }
        if den.abs() < T::from_f64(pcfg.singularity_floor) {
            return Err(Error::SingularPochhammer {
                a: f64::NAN,
                order: format!("Ω{s:?} denominator"),
            });
        }
        Ok(num / den)
    }

    fn term(&mut self, s: &[u32]) -> Result<T> {
        let mut t = self.omega(s)?;
        for i in 0..self.n {
            let si = s[i] as usize;
            t *= self.xpow(i, si) / self.qfact(si);
        }
        Ok(t)
    }
}

/// Calls `f` on every `s` with `|s| = total`, lexicographically ascending.
pub fn for_each_in_shell<E>(n: usize, total: u32, mut f: impl FnMut(&[u32]) -> Result<(), E>) -> Result<(), E> {
    fn rec<E>(pos: usize, remaining: u32, s: &mut [u32], f: &mut impl FnMut(&[u32]) -> Result<(), E>) -> Result<(), E> {
        if pos + 1 == s.len() {
            s[pos] = remaining;
            return f(s);
        }
        for v in 0..=remaining {
            s[pos] = v;
            rec(pos + 1, remaining - v, s, f)?;
        }
        Ok(())
    }
    if n == 0 {
        return Ok(());
    }
    let mut s = vec![0u32; n];
    rec(0, total, &mut s, &mut f)
}

/// Shells until `q^{e·t}` falls below [`WARMUP_Q_POWER`] for the smallest
/// positive exponent `e` of the series (1 for the `(q, q)_s` factors).
fn warmup_shells(spec: &SeriesSpec) -> u32 {
    let multi = spec
        .upper_multi
        .iter()
        .chain(&spec.lower_multi)
        .flat_map(|p| p.exponents.iter().copied());
    let single = spec
        .upper_single
        .iter()
        .chain(&spec.lower_single)
        .flat_map(|l| l.iter().map(|p| p.exponent));
    let e_min = multi.chain(single).filter(|&e| e > 0.0).fold(1.0f64, f64::min);
    let t = WARMUP_Q_POWER.ln() / (e_min * spec.base.get().ln());
    t.ceil().clamp(0.0, 1e6) as u32
}

/// Shell summation of `Σ_s weight(s) · term(s)`.
fn sum_series<T: Real>(
    engine: &mut TermEngine<T>,
    cfg: &EvalConfig,
    mut weight: impl FnMut(&[u32]) -> T,
) -> Result<EvalResult<T>> {
    let eps = T::from_f64(cfg.eps_term);
    let mut acc = T::zero();
    let mut stall = 0u32;
    let mut growth = 0usize;
    let mut prev_mag = T::zero();
    let mut last_mag = T::zero();
    for t in 0..=cfg.n_max_per_index {
        let mut shell_sum = T::zero();
        let mut shell_mag = T::zero();
        for_each_in_shell(engine.n, t, |s| {
            let w = weight(s);
            if w != T::zero() {
                let v = w * engine.term(s)?;
                shell_sum += v;
                shell_mag += v.abs();
            }
            Ok::<(), Error>(())
        })?;
        if !shell_mag.is_finite() || !shell_sum.is_finite() {
            return Err(Error::NonConvergent(format!(
                "series produced a non-finite shell at |s| = {t}"
            )));
        }
        acc += shell_sum;
        last_mag = shell_mag;

        if t > engine.warmup && prev_mag > T::zero() && shell_mag > prev_mag {
            growth += 1;
            if growth >= GROWTH_LIMIT {
                return Err(Error::NonConvergent(format!(
                    "shell magnitudes grew for {GROWTH_LIMIT} consecutive shells (|s| = {t})"
                )));
            }
        } else {
            growth = 0;
        }
        prev_mag = shell_mag;

        if shell_mag <= eps * acc.abs() {
            stall += 1;
            if stall >= cfg.shell_stall {
                return Ok(EvalResult {
                    value: acc,
                    shells_used: t + 1,
                    last_shell_magnitude: last_mag,
                    truncated: false,
                });
            }
        } else {
            stall = 0;
        }
    }
    Ok(EvalResult {
        value: acc,
        shells_used: cfg.n_max_per_index + 1,
        last_shell_magnitude: last_mag,
        truncated: true,
    })
}

/// `F(x)` under an optional shift.
pub fn evaluate<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    cfg: &EvalConfig,
    shift: Option<&ShiftState>,
) -> Result<EvalResult<T>> {
    let none = ShiftState::none();
    let mut engine = TermEngine::new(spec, x, cfg, shift.unwrap_or(&none))?;
    sum_series(&mut engine, cfg, |_| T::one())
}

/// Jackson derivative in variable `k` from the series form
/// `Σ_s [s_k]_q Ω(s) Π x^s/(q,q)_s / x_k`.
///
/// At `x_k = 0` the analytic limit is returned: the `s_k = 1` slice with
/// `x_k` removed.
pub fn variable_derivative<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    k: usize,
    cfg: &EvalConfig,
    shift: Option<&ShiftState>,
) -> Result<EvalResult<T>> {
    check_var(spec, k)?;
    let none = ShiftState::none();
    let shift = shift.unwrap_or(&none);
    let base = spec.base;
    if x.get(k).is_some_and(|&xk| xk == T::zero()) {
        let mut unit = x.to_vec();
        unit[k] = T::one();
        let mut engine = TermEngine::new(spec, &unit, cfg, shift)?;
        return sum_series(&mut engine, cfg, |s| if s[k] == 1 { T::one() } else { T::zero() });
    }
    let mut engine = TermEngine::new(spec, x, cfg, shift)?;
    let mut brackets = BracketCache::new(base, 1.0);
    let r = sum_series(&mut engine, cfg, |s| brackets.get(s[k]))?;
    let xk = x[k];
    Ok(EvalResult {
        value: r.value / xk,
        last_shell_magnitude: r.last_shell_magnitude / xk.abs(),
        ..r
    })
}

/// `Σ_s [θ_k s_k]_q · Π_{j ∈ prefix} q^{θ_j s_j} · Ω'(s) Π_i x_i^{s_i}/(q,q)_{s_i}`.
///
/// This is the coefficient-level value of the `z_k D_{z_k,q}` terms in the
/// parameter-derivative expansions, with the prefix variables carrying the
/// cyclic `q^{θ_j}` multipliers.
pub fn weighted_evaluate<T: Real>(
    spec: &SeriesSpec,
    x: &[T],
    k: usize,
    theta_row: &[f64],
    prefix: &[usize],
    cfg: &EvalConfig,
    shift: Option<&ShiftState>,
) -> Result<EvalResult<T>> {
    check_var(spec, k)?;
    if theta_row.len() != spec.n_vars {
        return Err(Error::DimensionMismatch {
            what: "weighting row".into(),
            expected: spec.n_vars,
            found: theta_row.len(),
        });
    }
    for &j in prefix {
        check_var(spec, j)?;
        if j == k {
            return Err(Error::InvalidArgument(format!(
                "target variable {k} may not appear in the prefix"
            )));
        }
    }
    let none = ShiftState::none();
    let mut engine = TermEngine::new(spec, x, cfg, shift.unwrap_or(&none))?;
    let base = spec.base;
    let mut bracket = BracketCache::new(base, theta_row[k]);
    let mut prefix_pows: Vec<(usize, PowCache<T>)> = prefix
        .iter()
        .map(|&j| (j, PowCache::new(base.as_real::<T>().powf(T::from_f64(theta_row[j])))))
        .collect();
    sum_series(&mut engine, cfg, |s| {
        let mut w = bracket.get(s[k]);
        if w == T::zero() {
            return w;
        }
        for (j, pow) in &mut prefix_pows {
            w *= pow.get(s[*j]);
        }
        w
    })
}

fn check_var(spec: &SeriesSpec, k: usize) -> Result<()> {
    if k < spec.n_vars {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "variable index {k} out of range for {} variables",
            spec.n_vars
        )))
    }
}

/// `[θ s]_q` for `s = 0, 1, …`.
struct BracketCache<T> {
    base: QBase,
    theta: f64,
    values: Vec<T>,
}

impl<T: Real> BracketCache<T> {
    fn new(base: QBase, theta: f64) -> Self {
        BracketCache {
            base,
            theta,
            values: Vec::new(),
        }
    }

    fn get(&mut self, s: u32) -> T {
        let s = s as usize;
        while self.values.len() <= s {
            let m = self.values.len() as f64;
            let v = if self.theta == 0.0 {
                T::zero()
            } else {
                q_bracket(T::from_f64(self.theta) * T::from_f64(m), self.base)
            };
            self.values.push(v);
        }
        self.values[s]
    }
}

/// `r^s` for `s = 0, 1, …`.
struct PowCache<T> {
    ratio: T,
    values: Vec<T>,
}

impl<T: Real> PowCache<T> {
    fn new(ratio: T) -> Self {
        PowCache {
            ratio,
            values: vec![T::one()],
        }
    }

    fn get(&mut self, s: u32) -> T {
        let s = s as usize;
        while self.values.len() <= s {
            let last = *self.values.last().expect("non-empty");
            self.values.push(last * self.ratio);
        }
        self.values[s]
    }
}
