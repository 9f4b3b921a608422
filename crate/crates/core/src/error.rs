use thiserror::Error;

/// Errors raised by graph construction, strategy evaluation and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("k must satisfy 1 <= k <= n-1, got k={k} with n={n} points")]
    InvalidNeighbourCount { k: usize, n: usize },

    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("dimension d={d} unsupported here; the in-degree bound is known for d in {{1,2,3}}")]
    UnsupportedDimension { d: usize },

    #[error(
        "node {node} has in-degree {in_degree}, above the bound {bound}; \
         this indicates duplicate points or a degenerate tie pattern"
    )]
    InDegreeOverflow {
        node: usize,
        in_degree: usize,
        bound: usize,
    },

    #[error("in-degree tally needs n > alpha_d*k + 1 (n={n}, alpha_d*k={alpha_k})")]
    TooFewNodes { n: usize, alpha_k: usize },

    #[error("star counts are not realizable by any graph: derived count for in-degree {j} is {value}")]
    InconsistentStarCounts { j: usize, value: i128 },

    #[error("constants table is for (d={table_d}, k={table_k}), requested (d={d}, k={k})")]
    TableMismatch {
        table_d: usize,
        table_k: usize,
        d: usize,
        k: usize,
    },

    #[error("no closed-form constants for (d={d}, k={k}); use the integral or empirical route")]
    NoKnownConstants { d: usize, k: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
