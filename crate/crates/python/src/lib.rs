//! Python module `qlauricella`.
//!
//! Series are built from JSON descriptors (the same documents the CLI
//! reads). Reports come back as JSON strings so Python callers can use
//! `json.loads` without a second schema.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyInt;

use qlauricella::deriv::{eval_derivative_closed, eval_derivative_definitional, expand_derivative};
use qlauricella::descriptor::{parse_descriptor, DescriptorDocument, H3_EXAMPLE};
use qlauricella::series::{evaluate, EvalConfig};
use qlauricella::{
    run_deriv, run_eval, run_suite as core_run_suite, run_verify, Block, Extended, ParamRef, PochOrder, Precision,
    QBase, Real, SuiteOptions, DEFAULT_SEED, SCHEMA,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn precision(name: &str) -> PyResult<Precision> {
    name.parse().map_err(value_error)
}

fn base(q: f64) -> PyResult<QBase> {
    QBase::new(q).map_err(value_error)
}

fn param_ref(block: &str, j: usize, var: Option<usize>) -> PyResult<ParamRef> {
    let block = match block {
        "upper_multi" => Block::UpperMulti,
        "lower_multi" => Block::LowerMulti,
        "upper_single" => Block::UpperSingle,
        "lower_single" => Block::LowerSingle,
        other => return Err(value_error(format!("unknown block `{other}`"))),
    };
    let p = ParamRef { block, j, var };
    if !p.is_well_formed() {
        return Err(value_error(format!("{} needs var exactly when single-index", block.as_str())));
    }
    Ok(p)
}

/// `[x]_q = (1 - q^x)/(1 - q)`.
#[pyfunction]
fn q_bracket(x: f64, q: f64) -> PyResult<f64> {
    Ok(qlauricella::q_bracket(x, base(q)?))
}

/// `(a; q)_order`; an int order may be negative, a float order is a real
/// order `>= 0`.
#[pyfunction]
#[pyo3(signature = (a, q, order, eps_prod = 1e-17))]
fn q_pochhammer(a: f64, q: f64, order: &Bound<'_, PyAny>, eps_prod: f64) -> PyResult<f64> {
    let order = if order.is_instance_of::<PyInt>() {
        let n: i64 = order.extract()?;
        if n >= 0 {
            PochOrder::NonNegInt(n as u64)
        } else {
            PochOrder::NegInt(n.unsigned_abs())
        }
    } else {
        PochOrder::Real(order.extract()?)
    };
    qlauricella::q_pochhammer(a, base(q)?, order, eps_prod).map_err(value_error)
}

/// A series with its evaluation points, parsed from a descriptor.
#[pyclass(frozen)]
struct Series {
    doc: DescriptorDocument,
}

impl Series {
    fn config(&self, precision: Precision) -> EvalConfig {
        self.doc.config.unwrap_or_else(|| EvalConfig::for_precision(precision))
    }

    fn check_point(&self, point: &[f64]) -> PyResult<()> {
        if point.len() != self.doc.series.n_vars {
            return Err(value_error(format!(
                "point has {} coordinates, series has {} variables",
                point.len(),
                self.doc.series.n_vars
            )));
        }
        Ok(())
    }
}

fn lift(point: &[f64]) -> Vec<Extended> {
    point.iter().map(|&v| Extended::from_f64(v)).collect()
}

#[pymethods]
impl Series {
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        parse_descriptor(descriptor).map(|doc| Series { doc }).map_err(value_error)
    }

    /// The two-variable Horn H3 example shipped with the library.
    #[staticmethod]
    fn h3_example() -> PyResult<Self> {
        Self::new(H3_EXAMPLE)
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.doc.series.n_vars
    }

    #[getter]
    fn q(&self) -> f64 {
        self.doc.series.base.get()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.doc.points.clone()
    }

    /// Parameters addressed by the descriptor, as `(block, j, var)`.
    #[getter]
    fn params(&self) -> Vec<(&'static str, usize, Option<usize>)> {
        self.doc
            .effective_params()
            .into_iter()
            .map(|p| (p.block.as_str(), p.j, p.var))
            .collect()
    }

    fn to_json(&self) -> String {
        self.doc.to_json()
    }

    #[pyo3(signature = (point, precision = "double"))]
    fn evaluate(&self, point: Vec<f64>, precision: &str) -> PyResult<f64> {
        self.check_point(&point)?;
        let prec = self::precision(precision)?;
        let cfg = self.config(prec);
        let s = &self.doc.series;
        match prec {
            Precision::Double => evaluate(s, &point, &cfg, None).map(|r| r.value),
            Precision::Extended => evaluate(s, &lift(&point), &cfg, None).map(|r| r.value.to_f64()),
        }
        .map_err(value_error)
    }

    /// `D_{p,q} F` at `point`; `method` is `closed` (expansion terms) or
    /// `definitional` (Jackson difference in the parameter).
    #[pyo3(signature = (point, block, j, var = None, method = "closed", precision = "double"))]
    fn derivative(
        &self,
        point: Vec<f64>,
        block: &str,
        j: usize,
        var: Option<usize>,
        method: &str,
        precision: &str,
    ) -> PyResult<f64> {
        self.check_point(&point)?;
        let p = param_ref(block, j, var)?;
        let prec = self::precision(precision)?;
        let cfg = self.config(prec);
        let s = &self.doc.series;
        let r = match (method, prec) {
            ("closed", Precision::Double) => eval_derivative_closed(s, &point, &p, &cfg).map(|v| v.0),
            ("closed", Precision::Extended) => eval_derivative_closed(s, &lift(&point), &p, &cfg).map(|v| v.0.to_f64()),
            ("definitional", Precision::Double) => eval_derivative_definitional(s, &point, &p, &cfg).map(|v| v.0),
            ("definitional", Precision::Extended) => {
                eval_derivative_definitional(s, &lift(&point), &p, &cfg).map(|v| v.0.to_f64())
            }
            (other, _) => return Err(value_error(format!("unknown method `{other}`"))),
        };
        r.map_err(value_error)
    }

    /// Expansion terms of `D_{p,q} F`, one line each.
    #[pyo3(signature = (block, j, var = None))]
    fn expand(&self, block: &str, j: usize, var: Option<usize>) -> PyResult<Vec<String>> {
        let p = param_ref(block, j, var)?;
        let terms = expand_derivative(&self.doc.series, &p).map_err(value_error)?;
        Ok(terms.iter().map(ToString::to_string).collect())
    }

    /// JSON report of `eval` over the descriptor points.
    #[pyo3(signature = (precision = "double"))]
    fn eval_report(&self, precision: &str) -> PyResult<String> {
        Ok(run_eval(&self.doc, self::precision(precision)?).to_json())
    }

    /// JSON report of both derivative pipelines for every parameter.
    #[pyo3(signature = (precision = "double"))]
    fn deriv_report(&self, precision: &str) -> PyResult<String> {
        Ok(run_deriv(&self.doc, self::precision(precision)?).to_json())
    }

    /// JSON report comparing the two pipelines at `tol`.
    #[pyo3(signature = (tol = 1e-9, precision = "double"))]
    fn verify(&self, tol: f64, precision: &str) -> PyResult<String> {
        Ok(run_verify(&self.doc, self::precision(precision)?, tol).to_json())
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(n_vars={}, q={}, points={})",
            self.doc.series.n_vars,
            self.doc.series.base.get(),
            self.doc.points.len()
        )
    }
}

/// Runs a built-in suite and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, tol = None, seed = DEFAULT_SEED, precision = "double"))]
fn run_suite(py: Python<'_>, name: &str, tol: Option<f64>, seed: u64, precision: &str) -> PyResult<String> {
    let opts = SuiteOptions {
        tol,
        seed,
        precision: self::precision(precision)?,
    };
    let report = py.detach(|| core_run_suite(name, &opts)).map_err(value_error)?;
    Ok(report.to_json())
}

#[pymodule]
#[pyo3(name = "qlauricella")]
fn qlauricella_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA", SCHEMA)?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    m.add_class::<Series>()?;
    m.add_function(wrap_pyfunction!(q_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(q_pochhammer, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
