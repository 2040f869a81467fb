use thiserror::Error;

/// Errors produced while loading, assembling, or solving a shedding study.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed Matpower matrix literal or statement.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A required block is missing or a block has the wrong shape.
    #[error("structural error: {0}")]
    Structure(String),

    /// The file uses Matpower features outside the supported subset.
    #[error("unsupported Matpower features: {}", .0.join(", "))]
    Unsupported(Vec<String>),

    /// JSON does not match the native case schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A case invariant does not hold.
    #[error("validation error: {0}")]
    Validation(String),

    /// A quantity is outside the domain of an equity computation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    /// The interior-point solver hit a numerical breakdown.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
