//! JSON series descriptors (`"schema": "qlauricella/1"`).
//!
//! A descriptor bundles a [`SeriesSpec`], an optional [`EvalConfig`], the
//! evaluation points and the parameters whose derivatives are requested.
//! Field-by-field documentation lives in `docs/schema.md`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::param::ParamRef;
use crate::series::{validate, Diagnostic, EvalConfig, SeriesSpec};

pub const SCHEMA: &str = "qlauricella/1";

const REQUIRED_FIELDS: [&str; 3] = ["schema", "series", "points"];
const REQUIRED_SERIES_FIELDS: [&str; 2] = ["n_vars", "q"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorDocument {
    pub schema: String,
    pub series: SeriesSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<EvalConfig>,
    pub points: Vec<Vec<f64>>,
    /// Empty means every parameter of the series.
    #[serde(default)]
    pub params: Vec<ParamRef>,
}

/// One field-level problem, located by a dotted path such as
/// `series.upper_multi[0].exponents[1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("descriptor does not match the schema:\n  {}", join_issues(.0))]
    Schema(Vec<SchemaIssue>),
}

fn join_issues(issues: &[SchemaIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  ")
}

impl DescriptorDocument {
    pub fn new(series: SeriesSpec, points: Vec<Vec<f64>>) -> Self {
        DescriptorDocument {
            schema: SCHEMA.to_string(),
            series,
            config: None,
            points,
            params: Vec::new(),
        }
    }

    pub fn with_config(mut self, cfg: EvalConfig) -> Self {
        self.config = Some(cfg);
        self
    }

    pub fn with_params(mut self, params: Vec<ParamRef>) -> Self {
        self.params = params;
        self
    }

    /// The requested parameters, or all of them when none are listed.
    pub fn effective_params(&self) -> Vec<ParamRef> {
        if self.params.is_empty() {
            self.series.param_refs()
        } else {
            self.params.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> SchemaIssue {
    SchemaIssue {
        path: path.into(),
        message: message.into(),
    }
}

fn missing_fields(v: &Value) -> Vec<SchemaIssue> {
    let mut out = Vec::new();
    let Some(obj) = v.as_object() else {
        out.push(issue("$", "top level must be an object"));
        return out;
    };
    for f in REQUIRED_FIELDS {
        if !obj.contains_key(f) {
            out.push(issue(f, "required field is missing"));
        }
    }
    if let Some(series) = obj.get("series").and_then(Value::as_object) {
        for f in REQUIRED_SERIES_FIELDS {
            if !series.contains_key(f) {
                out.push(issue(format!("series.{f}"), "required field is missing"));
            }
        }
    }
    out
}

fn diagnostic_issue(d: &Diagnostic) -> SchemaIssue {
    let path = match d {
        Diagnostic::ZeroVariables => "series.n_vars".to_string(),
        Diagnostic::DimensionMismatch { what, .. }
        | Diagnostic::NegativeExponent { what, .. }
        | Diagnostic::NonFiniteValue { what } => format!("series.{what}"),
        Diagnostic::SingularLowerParameter { param, .. } => format!("series.{}", param_path(param)),
    };
    issue(path, d.to_string())
}

fn param_path(p: &ParamRef) -> String {
    match p.var {
        Some(i) => format!("{}[{i}][{}]", p.block.as_str(), p.j),
        None => format!("{}[{}]", p.block.as_str(), p.j),
    }
}

fn semantic_issues(doc: &DescriptorDocument) -> Vec<SchemaIssue> {
    let mut out = Vec::new();
    if doc.schema != SCHEMA {
        out.push(issue(
            "schema",
            format!("expected \"{SCHEMA}\", found \"{}\"", doc.schema),
        ));
    }
    let cfg = doc.config.unwrap_or_default();
    if let Some(c) = &doc.config {
        if let Err(e) = c.check() {
            out.push(issue("config", e.to_string()));
        }
    }
    out.extend(validate(&doc.series, &cfg).iter().map(diagnostic_issue));
    let n = doc.series.n_vars;
    if doc.points.is_empty() {
        out.push(issue("points", "at least one evaluation point is required"));
    }
    for (k, x) in doc.points.iter().enumerate() {
        if x.len() != n {
            out.push(issue(
                format!("points[{k}]"),
                format!("expected {n} coordinates, found {}", x.len()),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            out.push(issue(format!("points[{k}]"), "coordinates must be finite"));
        }
    }
    for (k, p) in doc.params.iter().enumerate() {
        if let Err(e) = doc.series.param_value(p) {
            out.push(issue(format!("params[{k}]"), e.to_string()));
        }
    }
    out
}

/// Parses and validates descriptor text.
pub fn parse_descriptor(text: &str) -> Result<DescriptorDocument, DescriptorError> {
    if text.trim().is_empty() {
        return Err(DescriptorError::Schema(missing_fields(&Value::Object(
            Default::default(),
        ))));
    }
    let value: Value = serde_json::from_str(text).map_err(|e| DescriptorError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let missing = missing_fields(&value);
    if !missing.is_empty() {
        return Err(DescriptorError::Schema(missing));
    }
    let mut doc: DescriptorDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        DescriptorError::Schema(vec![issue(path, e.into_inner().to_string())])
    })?;
    doc.series.pad_single_blocks();
    let issues = semantic_issues(&doc);
    if issues.is_empty() {
        Ok(doc)
    } else {
        Err(DescriptorError::Schema(issues))
    }
}

pub fn read_descriptor(path: &Path) -> Result<DescriptorDocument, DescriptorError> {
    let text = std::fs::read_to_string(path).map_err(|source| DescriptorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_descriptor(&text)
}

/// The `H_{q,3}` descriptor shipped with the crate.
pub const H3_EXAMPLE: &str = include_str!("../examples/h3.example.json");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::h3::{h3_spec, H3Params};

    #[test]
    fn bundled_example_is_h3() {
        let doc = parse_descriptor(H3_EXAMPLE).unwrap();
        let p = H3Params::new(0.3, 0.2, 0.7, 0.5).unwrap();
        assert_eq!(doc.series, h3_spec(&p));
        assert_eq!(doc.points, vec![vec![0.1, 0.1]]);
    }

    #[test]
    fn empty_document_lists_required_fields() {
        for text in ["", "  \n", "{}"] {
            let Err(DescriptorError::Schema(issues)) = parse_descriptor(text) else {
                panic!("expected schema error for {text:?}");
            };
            let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
            assert_eq!(paths, REQUIRED_FIELDS);
        }
    }

    #[test]
    fn negative_exponent_is_rejected() {
        let text = H3_EXAMPLE.replacen("2.0", "-1.0", 1);
        let Err(DescriptorError::Schema(issues)) = parse_descriptor(&text) else {
            panic!("expected schema error");
        };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "series.upper_multi[0].exponents[0]");
    }

    #[test]
    fn syntax_error_has_location() {
        let Err(DescriptorError::Syntax { line, column, .. }) = parse_descriptor("{\n  \"schema\": ,\n}") else {
            panic!("expected syntax error");
        };
        assert_eq!((line, column), (2, 13));
    }

    #[test]
    fn type_error_has_field_path() {
        let text = H3_EXAMPLE.replacen("\"n_vars\": 2", "\"n_vars\": \"two\"", 1);
        let Err(DescriptorError::Schema(issues)) = parse_descriptor(&text) else {
            panic!("expected schema error");
        };
        assert_eq!(issues[0].path, "series.n_vars");
    }

    #[test]
    fn wrong_schema_and_point_length() {
        let mut doc = parse_descriptor(H3_EXAMPLE).unwrap();
        doc.schema = "qlauricella/0".into();
        doc.points.push(vec![0.1]);
        let Err(DescriptorError::Schema(issues)) = parse_descriptor(&doc.to_json()) else {
            panic!("expected schema error");
        };
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, ["schema", "points[1]"]);
    }

    #[test]
    fn unknown_param_is_rejected() {
        let doc = parse_descriptor(H3_EXAMPLE)
            .unwrap()
            .with_params(vec![ParamRef::upper_single(0, 0)]);
        let Err(DescriptorError::Schema(issues)) = parse_descriptor(&doc.to_json()) else {
            panic!("expected schema error");
        };
        assert_eq!(issues[0].path, "params[0]");
    }

    #[test]
    fn round_trip() {
        let doc = parse_descriptor(H3_EXAMPLE)
            .unwrap()
            .with_config(EvalConfig::default())
            .with_params(vec![ParamRef::upper_multi(0)]);
        assert_eq!(parse_descriptor(&doc.to_json()).unwrap(), doc);
    }
}
