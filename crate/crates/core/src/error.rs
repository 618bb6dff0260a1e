//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation requested inside the exclusion band around a singular point.
    #[error("evaluation at t={t} is inside the exclusion band around singular point z={z}")]
    Singularity { t: f64, z: f64 },

    /// A log-log slope fit had fewer usable scales than the minimum.
    #[error("insufficient data for fit: {got} usable scales, need at least {needed}")]
    InsufficientData { needed: usize, got: usize },

    /// An argument was outside its documented range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parametric curve cannot be written as a graph over the first coordinate.
    #[error("not a graph: phi1' changes sign on [{lo}, {hi}]")]
    NotAGraph { lo: f64, hi: f64 },

    /// A curvature hypothesis failed (nonpositive second derivative).
    #[error("hypothesis violation: min second derivative on [{a}, {b}] is {min} <= 0")]
    HypothesisViolation { a: f64, b: f64, min: f64 },

    /// Oscillatory quadrature would need more nodes than the configured cap.
    #[error("resolution budget exceeded: {needed} quadrature nodes needed, cap is {cap}")]
    Resolution { needed: usize, cap: usize },

    /// A field grid would need more samples than the configured memory budget.
    #[error("memory budget exceeded: grid needs {required} points, budget is {available}")]
    Memory { required: usize, available: usize },

    /// A norm was requested over a rectangle the field grid does not cover.
    #[error(
        "coverage error: field grid does not cover the weighted window of the rectangle ({detail})"
    )]
    Coverage { detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for config problems, 3 for
    /// resolution/budget problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Expr(_) => 2,
            Error::Resolution { .. } | Error::Memory { .. } | Error::Coverage { .. } => 3,
            _ => 1,
        }
    }
}
