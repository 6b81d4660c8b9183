use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
    /// A run produced a non-finite amplitude.
    #[error("run {run}: diverged at iteration {iteration}: {detail}")]
    Divergence { run: usize, iteration: usize, detail: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Analysis(String),
}
