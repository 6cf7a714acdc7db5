use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solve failed to reach the requested tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// An exact-enumeration request exceeds the hard size cap.
    #[error("cap exceeded: requested {requested}, cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    /// Rejection sampling would accept too rarely to be usable.
    #[error("acceptance probability too low: {0:.3e}")]
    AcceptanceTooLow(f64),

    /// A probability table degenerated (all-zero weights, NaN, underflow).
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// The requested statistical test does not apply to this parameter regime.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// Step-halving validation of the ODE integrator failed.
    #[error("step size rejected: halved-step solution differs by {discrepancy:.3e} at t={t}")]
    StepSizeRejected { t: f64, discrepancy: f64 },

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
