//! Error types shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Syntax error in the metric DSL, with 1-based line/column.
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    /// Identifier that is neither a coordinate variable nor a declared parameter.
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    /// Variable index out of range for the declared dimension (e.g. y5 with dim=3).
    DimensionMismatch {
        name: String,
        dim: usize,
        line: usize,
        col: usize,
    },
    /// Malformed metric file (missing/duplicate statements, bad values).
    Spec(String),
    /// Evaluation hit a domain violation (negative sqrt argument, log of a
    /// non-positive value, division by zero, non-integer power of a
    /// non-positive base). Carries the offending subexpression.
    DomainViolation { what: String, expr: String },
    /// Evaluation produced a non-finite value from finite inputs.
    NonFinite { expr: String },
    /// Point rejected by the metric's domain predicate or energy positivity.
    OutOfDomain(String),
    /// Metric tensor numerically degenerate at the sample point.
    DegenerateMetric { det: f64 },
    /// Covariant derivative requested for a tensor valence we do not support.
    UnsupportedValence(String),
    /// Vector-field kind incompatible with the requested condition check.
    IncompatibleFieldKind { kind: String, condition: String },
    /// Sampler could not produce enough in-domain points.
    NoSamples(String),
    /// Unknown catalog name.
    UnknownBuiltin(String),
    /// Invalid parameter override for a catalog metric.
    InvalidOverride(String),
    /// Command-line usage error.
    Usage(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Syntax { line, col, msg } => {
                write!(f, "syntax error at {}:{}: {}", line, col, msg)
            }
            Error::UnknownIdentifier { name, line, col } => {
                write!(f, "unknown identifier `{}` at {}:{}", name, line, col)
            }
            Error::DimensionMismatch {
                name,
                dim,
                line,
                col,
            } => write!(
                f,
                "unknown variable {}: index exceeds dim={} (at {}:{})",
                name, dim, line, col
            ),
            Error::Spec(msg) => write!(f, "invalid metric specification: {}", msg),
            Error::DomainViolation { what, expr } => {
                write!(f, "domain violation ({}) in `{}`", what, expr)
            }
            Error::NonFinite { expr } => write!(f, "non-finite result in `{}`", expr),
            Error::OutOfDomain(msg) => write!(f, "point outside metric domain: {}", msg),
            Error::DegenerateMetric { det } => {
                write!(f, "metric tensor degenerate (det g = {:e})", det)
            }
            Error::UnsupportedValence(v) => write!(f, "unsupported tensor valence {}", v),
            Error::IncompatibleFieldKind { kind, condition } => write!(
                f,
                "field kind `{}` incompatible with {}-condition",
                kind, condition
            ),
            Error::NoSamples(msg) => write!(f, "no in-domain samples: {}", msg),
            Error::UnknownBuiltin(name) => write!(f, "unknown catalog metric `{}`", name),
            Error::InvalidOverride(msg) => write!(f, "invalid parameter override: {}", msg),
            Error::Usage(msg) => write!(f, "{}", msg),
        }
    }
}

impl std::error::Error for Error {}
