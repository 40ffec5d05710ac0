//! Evaluation and parameter q-derivatives of the q-extended Srivastava–Daoust
//! generalized Lauricella series.
//!
//! * [`qcore`]: q-bracket, q-Pochhammer (integer, negative, real order),
//!   Jackson derivative, cyclic bracket splitting.
//! * [`series`]: series descriptor, term `Ω(s)`, shell summation, variable
//!   derivatives and weighted/shifted sums.
//! * [`deriv`]: closed-form parameter-derivative expansions, the
//!   definitional difference quotient, and their comparison.
//! * [`h3`]: the q-analog of Horn's `H_3` with hand-assembled derivatives.
//! * [`descriptor`], [`report`], [`suite`]: JSON descriptors, run reports and
//!   the built-in verification suites behind the command-line tool.

pub mod deriv;
pub mod descriptor;
pub mod error;
pub mod h3;
pub mod param;
pub mod qcore;
pub mod real;
pub mod report;
pub mod series;
pub mod suite;

pub use deriv::{
    eval_derivative_closed, eval_derivative_definitional, expand_derivative, verify, ExpansionTerm, VerifyReport,
};
pub use descriptor::{parse_descriptor, read_descriptor, DescriptorDocument, DescriptorError, SCHEMA};
pub use error::{Error, Result};
pub use h3::{h3_deriv_a, h3_deriv_b, h3_deriv_c, h3_spec, H3Params};
pub use param::{Block, ParamRef};
pub use qcore::{jackson_derivative, q_bracket, q_pochhammer, split_q_bracket, PochOrder, QBase};
pub use real::{Extended, Precision, Real};
pub use report::{run_deriv, run_eval, run_expand, run_verify, CaseRecord, RunReport};
pub use series::{
    evaluate, omega, validate, variable_derivative, weighted_evaluate, EvalConfig, EvalResult, MultiIndex, SeriesSpec,
    ShiftState,
};
pub use suite::{run_suite, SuiteOptions, UnknownSuite, DEFAULT_SEED};
