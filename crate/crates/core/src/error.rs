use thiserror::Error;

/// Errors raised by graph construction, the oracle, the solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: {reachable} of {n_agents} nodes reachable from node 1")]
    DisconnectedGraph { reachable: usize, n_agents: usize },

    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, &'static str),

    #[error("no connected random geometric graph after {0} resamples")]
    ConnectivityRetryExhausted(usize),

    #[error("objective is not finite at the queried point")]
    DomainError,

    #[error("no closed-form smoothing for {0}")]
    UnsupportedKind(&'static str),

    #[error("brute-force projection supports dimension <= 3, got {0}")]
    DimensionTooLarge(usize),

    #[error("iterate diverged at iteration {iter} (max |z| = {magnitude:e})")]
    NumericalOverflow { iter: usize, magnitude: f64 },

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
