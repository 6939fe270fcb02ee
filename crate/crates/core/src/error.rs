use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by scenario loading, the subproblem solvers and the driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scenario config: {0}")]
    MalformedConfig(String),

    #[error("infeasible endpoints: |q_F - q_I| = {distance} m exceeds reachable {reach} m")]
    InfeasibleEndpoints { distance: f64, reach: f64 },

    #[error("constant `{name}` must be strictly positive (got {value})")]
    NonPositiveConstant { name: &'static str, value: f64 },

    #[error("solver failure in {context}: {detail}")]
    SolverFailure { context: String, detail: String },

    #[error("degenerate allocation at user {user}, slot {slot}: positive power with vanishing bandwidth")]
    DegenerateAllocation { user: usize, slot: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn solver(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::SolverFailure {
            context: context.into(),
            detail: detail.into(),
        }
    }

    /// Prefix the context of a solver failure, leaving other variants untouched.
    pub fn with_context(self, outer: &str) -> Self {
        match self {
            Error::SolverFailure { context, detail } => Error::SolverFailure {
                context: format!("{outer}: {context}"),
                detail,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
