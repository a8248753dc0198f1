//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented domain precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A strategy was given a budget below its minimum.
    #[error("budget error: {0}")]
    Budget(String),

    /// The objective kind does not support the requested operation.
    #[error("objective kind error: {0}")]
    WrongObjectiveKind(String),

    /// Linear algebra failed beyond recovery (e.g. Cholesky after jitter escalation).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Enumeration refused because the space exceeds the guard size.
    #[error("space too large: {actual} configurations exceed the guard of {guard}")]
    SpaceTooLarge { actual: u64, guard: u64 },

    /// A dataset slice request overran the dataset capacity.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// The plan file failed to parse or validate.
    #[error("plan error: {0}")]
    Plan(String),

    /// The raw store is missing cells required for the report.
    #[error("incomplete store: missing cells: {}", .0.join(", "))]
    IncompleteStore(Vec<String>),

    /// A store file could not be read or written.
    #[error("store I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A persisted record failed to parse.
    #[error("store parse error: {0}")]
    StoreParse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
