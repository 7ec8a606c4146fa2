use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension mismatch, r == s, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A value does not satisfy the invariants of its type.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Objective values could exceed the i64 range.
    #[error("objective may overflow: n={n}, max flow={max_a}, max distance={max_b}")]
    Overflow { n: usize, max_a: i64, max_b: i64 },

    /// A certified minimum fell below the clause lower bound.
    #[error("lower bound violated: minimum {minimum} < global lower bound {bound}")]
    LowerBoundViolated { minimum: i64, bound: i64 },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("instance dimension {n} exceeds enumeration cap {cap}; use branch-and-bound")]
    EnumerationCap { n: usize, cap: usize },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("{path}: {reason}")]
    Validation { path: PathBuf, reason: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no fit: {0}")]
    NoFit(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// The error and its sources joined by `": "`.
pub fn error_chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut cur = err.source();
    while let Some(e) = cur {
        out.push_str(": ");
        out.push_str(&e.to_string());
        cur = e.source();
    }
    out
}
