use thiserror::Error;

/// Crate-wide error type. Every fallible operation in the solver stack
/// returns `Result<T, Error>`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Matrix Market (or other text format) parse failure, with the
    /// 1-based line number of the offending line.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A matrix or vector failed a structural invariant.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// All pivot candidates for a column fell below the absolute floor
    /// and no parent frontal remains to absorb it.
    #[error("matrix is structurally or numerically singular at column {column}")]
    Singular { column: usize },

    /// Refactorization was handed a matrix whose pattern differs from the
    /// analyzed one; `column` is the first differing column.
    #[error("sparsity pattern differs from the analyzed matrix at column {column}")]
    PatternMismatch { column: usize },

    /// A scheduling action referenced an edge that does not exist or is
    /// not in the state it must be in (cut vs. uncut).
    #[error("invalid scheduling action: {0}")]
    InvalidAction(String),

    /// Q-table file is corrupt, has the wrong version tag, or was trained
    /// with a featurizer that does not match the runtime configuration.
    #[error("q-table error: {0}")]
    QTable(String),

    /// A generator spec is internally inconsistent.
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    /// A factorization worker thread panicked or disconnected; the run is
    /// aborted rather than left hanging.
    #[error("worker failure: {0}")]
    Worker(String),
}

pub type Result<T> = std::result::Result<T, Error>;
