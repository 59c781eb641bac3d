//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwscError {
    /// An input matrix or image contained a NaN or infinity.
    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    /// Dimensions of two operands disagree.
    #[error("shape mismatch: {context} (expected {expected}, got {actual})")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    /// A scalar parameter is out of its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The Sylvester system has no unique solution (spectra of A and -B intersect).
    #[error("no unique solution: min eigenvalue of A plus min diagonal of B is {witness}")]
    NoUniqueSolution { witness: f64 },

    /// The dense Kronecker solver refuses systems above its size guard.
    #[error("naive Sylvester solver size guard exceeded: r*M = {size} > {guard}")]
    SizeGuardExceeded { size: usize, guard: usize },

    /// ADMM produced a NaN/inf iterate.
    #[error("solver diverged: non-finite iterate at ADMM iteration {iteration}")]
    SolverDiverged { iteration: usize },

    /// A pixel received no patch estimate during aggregation.
    #[error("aggregation left pixel ({row}, {col}) uncovered")]
    UncoveredPixel { row: usize, col: usize },

    /// Solver failure annotated with its position in the outer denoising loop.
    #[error("solver failed at outer iteration {outer_iteration}, patch ({row}, {col}): {source}")]
    SolverAt {
        outer_iteration: usize,
        row: usize,
        col: usize,
        #[source]
        source: Box<TwscError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image decode/encode error: {0}")]
    Image(#[from] image::ImageError),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
}

pub type Result<T> = std::result::Result<T, TwscError>;
