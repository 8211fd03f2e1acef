// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, serde::Serialize)]
pub struct Loc {
    pub file: Option<PathBuf>,
    pub line: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(p) => write!(f, "{}:{}", p.display(), self.line),
            None => write!(f, "line {}", self.line),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },

    #[error("{loc}: key `{key}`: {msg}")]
    Value { loc: Loc, key: String, msg: String },

    #[error("{loc}: unknown key `{key}`")]
    UnknownKey { loc: Loc, key: String },

    #[error("duplicate key `{key}` at {first} and {second}")]
    DuplicateKey { key: String, first: Loc, second: Loc },

    #[error("missing required key `{key}`{}", context.as_ref().map(|c| format!(" in {c}")).unwrap_or_default())]
    MissingKey { key: String, context: Option<String> },

    #[error("unknown technology node `{0}`")]
    UnknownNode(String),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: String, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("sense margin violated: {0}")]
    SenseMargin(String),

    #[error("charge integral does not converge: {0}")]
    NonConvergent(String),

    #[error("search space is empty after filtering: {0}")]
    EmptySearchSpace(String),

    #[error("no feasible design under the given constraints: {0}")]
    NoFeasibleDesign(String),

    #[error("capacity mismatch: {0} bytes vs {1} bytes")]
    CapacityMismatch(u64, u64),

    #[error("trace line {line}: {msg}")]
    Trace { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn non_positive(what: impl Into<String>, value: f64) -> Self {
        Error::NonPositive { what: what.into(), value }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn design(msg: impl Into<String>) -> Self {
        Error::InvalidDesign(msg.into())
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::Value { .. } => "value",
            Error::UnknownKey { .. } => "unknown_key",
            Error::DuplicateKey { .. } => "duplicate_key",
            Error::MissingKey { .. } => "missing_key",
            Error::UnknownNode(_) => "unknown_node",
            Error::NonPositive { .. } => "non_positive",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidDesign(_) => "invalid_design",
            Error::SenseMargin(_) => "sense_margin",
            Error::NonConvergent(_) => "non_convergent",
            Error::EmptySearchSpace(_) => "empty_search_space",
            Error::NoFeasibleDesign(_) => "no_feasible_design",
            Error::CapacityMismatch(..) => "capacity_mismatch",
            Error::Trace { .. } => "trace",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that a physical quantity is strictly positive and finite.
pub(crate) fn ensure_positive(what: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::non_positive(what, value))
    }
}
