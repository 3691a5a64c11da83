//! IO, file formats and the sweep runner behind the `singosc` binary.
//!
//! Everything deterministic lives here so the integration tests can drive the
//! same code paths the binary uses: trajectory CSV (`t,u,du,p,E`), ordered
//! 17-significant-digit JSON reports, and the parallel-but-ordered parameter
//! sweep.

pub mod commands;
pub mod json;
pub mod report;
pub mod sweep;
pub mod traj_csv;

use std::fmt;

/// Process-level error classes; each maps to a distinct message prefix and
/// exit code (validation 2, io 2, numerical 3).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<singosc::Error> for CliError {
    fn from(e: singosc::Error) -> Self {
        match e {
            singosc::Error::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Adapter attaching the offending path to an io failure.
pub fn io_err<E: fmt::Display>(path: &std::path::Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}
