use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate tetrahedron {tet}: volume {volume:e}")]
    Geometry { tet: usize, volume: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A construction-time self check failed. This points at a transcription
    /// bug in a basis or functional, never at user input.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("eigensolver error: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
