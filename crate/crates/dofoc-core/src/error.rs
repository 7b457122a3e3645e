//! Error types shared across the library.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the numerical layer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation
    /// (e.g. the gamma function at a non-positive integer).
    #[error("domain error: {0}")]
    Domain(String),

    /// A special-function evaluation could not reach the requested accuracy.
    /// Carries the best error estimate that was achieved so callers can decide
    /// whether the value is still usable.
    #[error(
        "accuracy not reached: requested {requested:.3e}, achieved ~{achieved:.3e}"
    )]
    Accuracy { requested: f64, achieved: f64 },

    /// The per-step fixed-point iteration of a marching solver failed to
    /// converge within the configured iteration budget.
    #[error("step solver diverged at step {step}: last update {last_update:.3e}")]
    SolverDivergence { step: usize, last_update: f64 },

    /// The user-supplied dynamics or cost returned a non-finite value.
    #[error("dynamics/cost evaluation produced a non-finite value at step {step}")]
    DynamicsEvaluation { step: usize },

    /// Structurally invalid input: mismatched dimensions, empty ladders,
    /// degenerate grids, negative weights, and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
