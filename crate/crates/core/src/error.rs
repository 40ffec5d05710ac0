use thiserror::Error;

use crate::param::ParamRef;
use crate::series::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base q = {q} must lie strictly inside (0, 1)")]
    InvalidBase { q: f64 },

    #[error("q-Pochhammer ({a}, q)_{order} has a vanishing denominator factor")]
    SingularPochhammer { a: f64, order: String },

    #[error("negative real Pochhammer order {0} is not supported")]
    NegativeRealOrder(f64),

    #[error("{0} did not converge")]
    NonConvergent(String),

    #[error("Jackson derivative is undefined at x = 0")]
    ZeroPoint,

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("parameter {param} = {value} is too close to 1; the prefactor 1/(1 - p) is singular")]
    SingularPrefactor { param: ParamRef, value: f64 },

    #[error("parameter {0} is zero; the difference quotient divides by it")]
    ZeroParameter(ParamRef),

    #[error("parameter reference {0} does not resolve in this series")]
    UnknownParameter(ParamRef),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series descriptor failed validation: {}", join_diagnostics(.0))]
    InvalidSpec(Vec<Diagnostic>),
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
