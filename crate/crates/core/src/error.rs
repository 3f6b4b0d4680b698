use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {index} (size {size})")]
    Index { index: usize, size: usize },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("contract violated: {0}")]
    Contract(String),

    /// Rejection sampling could not place another point for this process.
    #[error("design saturated: process {process} accepted {accepted} of {requested} points before the rejection budget ran out")]
    Saturation {
        process: usize,
        accepted: usize,
        requested: usize,
    },

    /// Two points of the same process coincide, so no positive `Δ` exists.
    #[error("zero distance in process {process}: points {first} and {second} coincide")]
    ZeroDistance {
        process: usize,
        first: usize,
        second: usize,
    },

    #[error("certification failed: {0}")]
    Certification(String),

    /// The model's spectral floor over the window box is not positive.
    #[error("certification failed: spectral positivity: floor {value:e} at f≈{argmin:?}")]
    SpectralFloor { value: f64, argmin: Vec<f64> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
