use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Every gamma draw of a Dirichlet sample underflowed to zero, repeatedly.
    #[error("dirichlet sample underflowed {retries} times in a row")]
    SamplingUnderflow { retries: usize },

    /// Boundary point where the density is unbounded.
    #[error("density is infinite at coordinate {coordinate} (alpha < 1 on the boundary)")]
    InfiniteDensity { coordinate: usize },

    #[error("moment order {order} exceeds the configured cap {cap}")]
    OrderCapExceeded { order: u32, cap: u32 },

    #[error("counts sum to {got}, expected {expected} trials")]
    CountMismatch { expected: u32, got: u32 },

    #[error("enumeration of {trials} trials exceeds the cap {cap}")]
    EnumerationCapExceeded { trials: u32, cap: u32 },

    #[error("sample variance is zero; the batch is degenerate")]
    ZeroVariance,

    #[error("coordinate {coordinate} out of range for dimension {dim}")]
    CoordinateOutOfRange { coordinate: usize, dim: usize },

    #[error("batch is empty")]
    EmptyBatch,

    #[error("z = {re}{im:+}i lies on the support [-1, 1]")]
    BranchCut { re: f64, im: f64 },

    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    QuadratureNonConvergence { achieved: f64 },

    #[error("contour disk of radius {radius} about {center} meets the support [-1, 1]")]
    ContourIntersectsSupport { center: f64, radius: f64 },

    #[error("contour derivative did not converge (last relative change {achieved:e})")]
    ContourNonConvergence { achieved: f64 },
}
