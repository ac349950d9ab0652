use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const SCHEMA: i32 = 2;
    pub const PHYSICS: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The scenario does not match the schema or violates an input invariant.
    /// `line`/`column` are set for JSON syntax and type errors, whose
    /// message already mentions them.
    #[error("schema error at `{path}`: {message}")]
    Schema {
        path: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error(transparent)]
    Physics(#[from] fsoq_core::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Schema { .. } => exit::SCHEMA,
            CliError::Physics(e) => physics_exit_code(e),
        }
    }
}

/// Invalid parameters are input errors; quadrature failures get their own
/// code; everything else is outside a formula's domain.
pub fn physics_exit_code(e: &fsoq_core::Error) -> i32 {
    match e {
        fsoq_core::Error::Parameter { .. } => exit::SCHEMA,
        fsoq_core::Error::Convergence { .. } => exit::CONVERGENCE,
        _ => exit::PHYSICS,
    }
}

/// Machine-readable form of a per-quantity failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Parameter,
    Domain,
    Divergence,
    Convergence,
    Trace,
}

impl From<&fsoq_core::Error> for ErrorReport {
    fn from(e: &fsoq_core::Error) -> Self {
        use fsoq_core::Error as E;
        let kind = match e {
            E::Parameter { .. } => ErrorKind::Parameter,
            E::Domain { .. } => ErrorKind::Domain,
            E::Divergence { .. } => ErrorKind::Divergence,
            E::Convergence { .. } => ErrorKind::Convergence,
            E::Trace { .. } => ErrorKind::Trace,
        };
        ErrorReport {
            kind,
            message: e.to_string(),
        }
    }
}

impl ErrorReport {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Parameter => exit::SCHEMA,
            ErrorKind::Convergence => exit::CONVERGENCE,
            _ => exit::PHYSICS,
        }
    }
}
