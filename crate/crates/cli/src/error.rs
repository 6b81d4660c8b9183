use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use simcim::graph::GraphError;
use simcim::SolverError;
use thiserror::Error;

/// Failure of a CLI invocation. Each variant maps to its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error in {path}: {source}")]
    Parse { path: String, source: GraphError },
    #[error("solver diverged: {0}")]
    Divergence(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{failed} of {total} benchmark entries failed")]
    SuiteFailed { failed: usize, total: usize },
}

impl CliError {
    pub const EXIT_CONFIG: u8 = 2;
    pub const EXIT_PARSE: u8 = 3;
    pub const EXIT_DIVERGENCE: u8 = 4;
    pub const EXIT_IO: u8 = 5;
    pub const EXIT_SUITE: u8 = 6;

    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Parse { .. } => Self::EXIT_PARSE,
            CliError::Divergence(_) => Self::EXIT_DIVERGENCE,
            CliError::Io { .. } => Self::EXIT_IO,
            CliError::SuiteFailed { .. } => Self::EXIT_SUITE,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.exit_status())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Classifies a library error. `source` names the problem input for
    /// parse failures.
    pub(crate) fn from_solver(err: SolverError, source: &str) -> Self {
        match err {
            SolverError::InvalidParams(m) => CliError::Config(m),
            SolverError::UnknownSolver(name) => CliError::Config(format!("unknown solver `{name}`")),
            SolverError::Divergence { .. } => CliError::Divergence(err.to_string()),
            SolverError::Graph(g) => Self::from_graph(g, source),
            SolverError::Analysis(m) => CliError::Config(m),
        }
    }

    pub(crate) fn from_graph(err: GraphError, source: &str) -> Self {
        match err {
            GraphError::InvalidSpec(m) => CliError::Config(m),
            GraphError::Io(e) => CliError::io(source, e),
            other => CliError::Parse { path: source.to_string(), source: other },
        }
    }
}
