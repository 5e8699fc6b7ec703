use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mask is empty")]
    EmptyMask,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("k = {k} exceeds the number of samples {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("clusters {a} and {b} have coincident centroids")]
    CoincidentCentroids { a: usize, b: usize },
    #[error("empty k sweep: k_min = {k_min}, upper bound = {upper}")]
    EmptySweep { k_min: usize, upper: usize },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("degenerate enhancement: every component rasterized empty")]
    DegenerateEnhancement,
    #[error(
        "infeasible placement after {attempts} attempts (mask area {mask_area}, region area {region_area}, best outside fraction {best_outside:.3})"
    )]
    InfeasiblePlacement { attempts: usize, mask_area: usize, region_area: usize, best_outside: f64 },
    #[error("only {accepted} mutually compatible masks, need at least 2")]
    IncompatibleMasks { accepted: usize },
    #[error("entry {0} has no ARS score")]
    MissingScore(usize),
    #[error("both classes must be present")]
    SingleClass,
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
