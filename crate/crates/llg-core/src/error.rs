//! Error types shared across the solver.

use thiserror::Error;

/// Cells with |m~| below this magnitude are rejected by the projection
/// instead of being normalized.
pub const PROJECTION_EPS_MIN: f64 = 1e-8;

/// Upper limit on the dimension accepted by dense assembly.
pub const DENSE_DIM_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum LlgError {
    #[error(
        "projection degenerate at cell {cell}: |m~| = {magnitude:.3e} < {limit:.0e}",
        limit = PROJECTION_EPS_MIN
    )]
    DegenerateMagnitude { cell: usize, magnitude: f64 },

    #[error(
        "linear solver did not converge: {iterations} iterations, relative residual {residual:.3e}"
    )]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("operator dimension {dimension} exceeds dense assembly limit {limit}")]
    DimensionTooLarge { dimension: usize, limit: usize },

    #[error("order fit needs positive errors; case {index} has error {value:.3e}")]
    NonPositiveError { index: usize, value: f64 },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<LlgError>,
    },

    #[error("case {case_id} failed: {source}")]
    CaseFailed {
        case_id: usize,
        #[source]
        source: Box<LlgError>,
    },

    #[error("invalid run: {0}")]
    InvalidRun(String),
}

impl LlgError {
    /// Walks the source chain down to the originating error. Lets callers map
    /// a failure wrapped in step/case context onto its process exit code.
    pub fn root_cause(&self) -> &LlgError {
        match self {
            LlgError::StepFailed { source, .. } | LlgError::CaseFailed { source, .. } => {
                source.root_cause()
            }
            other => other,
        }
    }
}
