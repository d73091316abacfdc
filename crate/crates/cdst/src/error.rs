//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by instance validation, solving, and the oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file or value (bad JSON, unknown field, bad number).
    /// `path` locates the offending field when known.
    #[error("parse error at `{path}`: {detail}")]
    Parse { path: String, detail: String },

    /// The instance violates a model precondition (metric audit, weights,
    /// duplicate ids, disconnected graph, ...).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// An edge set that was required to be a tree is not one; the message
    /// names the offending vertex or edge.
    #[error("not a tree: {0}")]
    NotATree(String),

    /// A function argument fell outside its documented domain.
    #[error("domain violation in {func}: {constraint}")]
    Domain {
        func: &'static str,
        constraint: String,
    },

    /// Exhaustive search was asked for an instance above its size guard.
    #[error("{what} supports at most {limit}, got {actual}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        actual: usize,
    },

    /// An operation that only works on some metric kinds was called on
    /// another (e.g. exhaustive search needs an explicit edge set).
    #[error("unsupported metric for {op}: {detail}")]
    UnsupportedMetric { op: &'static str, detail: String },

    /// A proved invariant failed at runtime. This is a bug in the solver,
    /// never a property of the input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// File I/O failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, constraint: impl Into<String>) -> Self {
        Error::Domain {
            func,
            constraint: constraint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
