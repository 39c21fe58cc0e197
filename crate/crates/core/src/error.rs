use thiserror::Error;

/// Errors produced by the core algorithms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel matrix factorization failed ({points} points); the problem is ill-conditioned")]
    Factorization { points: usize },

    #[error("all cells are masked; nothing to encode")]
    AllMasked,

    #[error("zone mismatch: state is in zone {state:?}, dynamics are for zone {dynamics}")]
    ZoneMismatch { state: Option<usize>, dynamics: usize },

    #[error("non-finite measurement at k={k}")]
    NonFiniteMeasurement { k: u64 },

    #[error("trajectory lies entirely outside the grid bounds")]
    OutsideGrid,

    #[error("infeasible scene geometry: {0}")]
    Geometry(String),

    #[error("heading undefined: zero velocity at the first sample")]
    HeadingUndefined,

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
