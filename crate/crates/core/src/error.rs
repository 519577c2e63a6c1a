//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    /// A system, grid or experiment was configured inconsistently.
    #[error("configuration error: {0}")]
    Config(String),
    /// An orbit left the domain of the map.
    #[error("escaped at step {step}")]
    Escaped { step: usize },
    /// The refined neighborhood of a word has no points at the working resolution.
    #[error("empty refined neighborhood for word {word:?}")]
    EmptyNeighborhood { word: Vec<usize> },
    /// Frame coefficients do not satisfy the bunching bounds.
    #[error("eta-bunching violated: eta_min = {eta_min:.4}, eta_max = {eta_max:.4} at ({x:.4}, {xi:.4})")]
    EtaBunching {
        eta_min: f64,
        eta_max: f64,
        x: f64,
        xi: f64,
    },
    /// A fixed-point iteration stopped contracting.
    #[error("non-contraction observed at iteration {iteration}: factors {factors:?}")]
    NonContraction { iteration: usize, factors: Vec<f64> },
    /// Word enumeration would exceed the configured budget.
    #[error("word budget exceeded: largest feasible n is {max_n}")]
    Budget { max_n: usize },
    /// P(1) >= 0, so there is no gap regime.
    #[error("no gap regime: P(1) = {p1:.6} >= 0")]
    NoGapRegime { p1: f64 },
    /// Fewer scales than required for a fit.
    #[error("need at least {needed} usable scales, got {got}")]
    InsufficientScales { needed: usize, got: usize },
    /// A discretization that should be unitary is not.
    #[error("non-unitary discretization: defect {defect:.3e}")]
    NonUnitary { defect: f64 },
    /// Disk geometry violates the non-eclipse condition.
    #[error("eclipse condition violated by disks ({0}, {1}, {2})")]
    Eclipse(usize, usize, usize),
    /// Scale gate of the uncertainty principle fails.
    #[error("scale gate rejected: {0}")]
    ScaleGate(String),
    /// Cloud closeness fails for a pair of words.
    #[error("cloud condition violated by words {first:?} and {second:?} (distance {distance:.3e} > {bound:.3e})")]
    Cloud {
        first: Vec<usize>,
        second: Vec<usize>,
        distance: f64,
        bound: f64,
    },
    /// Dense eigen or singular value solver failed.
    #[error("linear algebra failure: {0}")]
    Numerical(String),
    /// Invalid argument outside the documented preconditions.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    /// Whether the error stems from invalid input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            LabError::Config(_) | LabError::Invalid(_) | LabError::Eclipse(..) | LabError::ScaleGate(_)
        )
    }
}
