//! Run reports for descriptor evaluations and verification suites.
//!
//! A report body is a pure function of its inputs: cases appear in case-id
//! order and every number is printed in shortest round-trip form. The
//! `wall_time_ms` field is the only part that varies between runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::deriv::{eval_derivative_closed, eval_derivative_definitional, expand_derivative, verify, ExpansionTerm};
use crate::descriptor::{DescriptorDocument, SCHEMA};
use crate::error::Error;
use crate::param::ParamRef;
use crate::real::{Extended, Precision, Real};
use crate::series::{evaluate, EvalConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub id: String,
    pub operation: String,
    /// SHA-256 of the canonical JSON of the case inputs.
    pub inputs_digest: String,
    pub values: BTreeMap<String, f64>,
    pub diagnostics: Vec<String>,
    pub passed: bool,
}

impl CaseRecord {
    pub fn new(id: impl Into<String>, operation: &str, inputs: &serde_json::Value) -> Self {
        CaseRecord {
            id: id.into(),
            operation: operation.to_string(),
            inputs_digest: digest(inputs),
            values: BTreeMap::new(),
            diagnostics: Vec::new(),
            passed: true,
        }
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn note(mut self, msg: impl Into<String>) -> Self {
        self.diagnostics.push(msg.into());
        self
    }

    pub fn fail(mut self, msg: impl Into<String>) -> Self {
        self.passed = false;
        self.note(msg)
    }

    pub fn pass_if(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }
}

pub fn digest(inputs: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(inputs).expect("inputs serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub precision: Precision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, precision: Precision, mut cases: Vec<CaseRecord>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let passed = cases.iter().filter(|c| c.passed).count();
        RunReport {
            schema: SCHEMA.to_string(),
            command: command.into(),
            precision,
            tolerance: None,
            seed: None,
            summary: Summary {
                total: cases.len(),
                passed,
                failed: cases.len() - passed,
            },
            cases,
            wall_time_ms: 0.0,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn timed_since(mut self, start: Instant) -> Self {
        self.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the wall-time field.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("wall_time_ms");
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// Plain-text rendering without the wall time.
    pub fn body_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} report: {} (precision {}",
            self.schema, self.command, self.precision
        );
        if let Some(t) = self.tolerance {
            let _ = write!(s, ", tol {t:e}");
        }
        if let Some(seed) = self.seed {
            let _ = write!(s, ", seed {seed}");
        }
        s.push_str(")\n");
        for c in &self.cases {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(s, "{mark} {}", c.id);
            for (k, v) in &c.values {
                let _ = write!(s, "  {k}={v:e}");
            }
            s.push('\n');
            for d in &c.diagnostics {
                let _ = writeln!(s, "    note: {d}");
            }
        }
        let _ = writeln!(
            s,
            "summary: {} cases, {} passed, {} failed",
            self.summary.total, self.summary.passed, self.summary.failed
        );
        s
    }

    pub fn to_text(&self) -> String {
        format!("{}wall time: {:.1} ms\n", self.body_text(), self.wall_time_ms)
    }
}

fn doc_config(doc: &DescriptorDocument, precision: Precision) -> EvalConfig {
    doc.config.unwrap_or_else(|| EvalConfig::for_precision(precision))
}

fn point_inputs(doc: &DescriptorDocument, cfg: &EvalConfig, x: &[f64], extra: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "series": doc.series,
        "config": cfg,
        "point": x,
        "extra": extra,
    })
}

fn point_id(k: usize) -> String {
    format!("p{k:03}")
}

fn to_t<T: Real>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&v| T::from_f64(v)).collect()
}

fn eval_cases<T: Real>(doc: &DescriptorDocument, cfg: &EvalConfig) -> Vec<CaseRecord> {
    doc.points
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let inputs = point_inputs(doc, cfg, x, serde_json::Value::Null);
            let case = CaseRecord::new(format!("eval/{}", point_id(k)), "eval", &inputs);
            match evaluate(&doc.series, &to_t::<T>(x), cfg, None) {
                Ok(r) => {
                    let case = case
                        .value("value", r.value.to_f64())
                        .value("shells_used", f64::from(r.shells_used))
                        .value("last_shell_magnitude", r.last_shell_magnitude.to_f64());
                    if r.truncated {
                        case.note("truncated at the per-index cap")
                    } else {
                        case
                    }
                }
                Err(e) => case.fail(e.to_string()),
            }
        })
        .collect()
}

fn deriv_cases<T: Real>(doc: &DescriptorDocument, cfg: &EvalConfig) -> Vec<CaseRecord> {
    let mut out = Vec::new();
    for (k, x) in doc.points.iter().enumerate() {
        let xt = to_t::<T>(x);
        for p in doc.effective_params() {
            let inputs = point_inputs(doc, cfg, x, serde_json::json!({ "param": p }));
            let mut case = CaseRecord::new(format!("deriv/{}/{p}", point_id(k)), "deriv", &inputs);
            match eval_derivative_closed(&doc.series, &xt, &p, cfg) {
                Ok((v, s)) => {
                    case = case.value("closed", v.to_f64());
                    if s.truncated {
                        case = case.note("closed form: truncated at the per-index cap");
                    }
                }
                Err(e) => case = case.fail(format!("closed form: {e}")),
            }
            match eval_derivative_definitional(&doc.series, &xt, &p, cfg) {
                Ok((v, s)) => {
                    case = case.value("definitional", v.to_f64());
                    if s.truncated {
                        case = case.note("definitional: truncated at the per-index cap");
                    }
                }
                // the closed form is still defined at p = 0
                Err(e @ Error::ZeroParameter(_)) => case = case.note(format!("definitional: {e}")),
                Err(e) => case = case.fail(format!("definitional: {e}")),
            }
            out.push(case);
        }
    }
    out
}

fn verify_cases<T: Real>(doc: &DescriptorDocument, cfg: &EvalConfig, tol: f64) -> Vec<CaseRecord> {
    let mut out = Vec::new();
    for (k, x) in doc.points.iter().enumerate() {
        let xt = to_t::<T>(x);
        for p in doc.effective_params() {
            let inputs = point_inputs(doc, cfg, x, serde_json::json!({ "param": p, "tol": tol }));
            let case = CaseRecord::new(format!("verify/{}/{p}", point_id(k)), "verify", &inputs);
            out.push(verify_record(case, &verify(&doc.series, &xt, &p, cfg, tol)));
        }
    }
    out
}

pub(crate) fn verify_record(mut case: CaseRecord, r: &crate::deriv::VerifyReport) -> CaseRecord {
    case = case
        .value("lhs", r.lhs)
        .value("rhs", r.rhs)
        .value("abs_diff", r.abs_diff)
        .value("rel_diff", r.rel_diff);
    for d in &r.diagnostics {
        case = case.note(d.clone());
    }
    case.pass_if(r.passed)
}

/// Evaluates the series at every point of the descriptor.
pub fn run_eval(doc: &DescriptorDocument, precision: Precision) -> RunReport {
    let start = Instant::now();
    let cfg = doc_config(doc, precision);
    let cases = match precision {
        Precision::Double => eval_cases::<f64>(doc, &cfg),
        Precision::Extended => eval_cases::<Extended>(doc, &cfg),
    };
    RunReport::new("eval", precision, cases).timed_since(start)
}

/// Closed-form and definitional derivatives for each requested parameter.
pub fn run_deriv(doc: &DescriptorDocument, precision: Precision) -> RunReport {
    let start = Instant::now();
    let cfg = doc_config(doc, precision);
    let cases = match precision {
        Precision::Double => deriv_cases::<f64>(doc, &cfg),
        Precision::Extended => deriv_cases::<Extended>(doc, &cfg),
    };
    RunReport::new("deriv", precision, cases).timed_since(start)
}

/// Compares the two derivative pipelines for each requested parameter.
pub fn run_verify(doc: &DescriptorDocument, precision: Precision, tol: f64) -> RunReport {
    let start = Instant::now();
    let cfg = doc_config(doc, precision);
    let cases = match precision {
        Precision::Double => verify_cases::<f64>(doc, &cfg, tol),
        Precision::Extended => verify_cases::<Extended>(doc, &cfg, tol),
    };
    RunReport::new("verify", precision, cases)
        .with_tolerance(tol)
        .timed_since(start)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub param: ParamRef,
    pub terms: Vec<ExpansionTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Symbolic expansions of the requested parameter derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandReport {
    pub schema: String,
    pub expansions: Vec<Expansion>,
}

impl ExpandReport {
    pub fn all_ok(&self) -> bool {
        self.expansions.iter().all(|e| e.error.is_none())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.expansions {
            let _ = writeln!(s, "D_{{{}}} F:", e.param);
            if let Some(err) = &e.error {
                let _ = writeln!(s, "  error: {err}");
            } else if e.terms.is_empty() {
                let _ = writeln!(s, "  0 (the series does not depend on this parameter)");
            }
            for t in &e.terms {
                let _ = writeln!(s, "  {t}");
            }
        }
        s
    }
}

pub fn run_expand(doc: &DescriptorDocument) -> ExpandReport {
    let expansions = doc
        .effective_params()
        .into_iter()
        .map(|param| match expand_derivative(&doc.series, &param) {
            Ok(terms) => Expansion {
                param,
                terms,
                error: None,
            },
            Err(e) => Expansion {
                param,
                terms: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    ExpandReport {
        schema: SCHEMA.to_string(),
        expansions,
    }
}
