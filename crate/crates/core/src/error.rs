//! Error type shared by every numerical routine in the crate.

use thiserror::Error;

/// Failure modes of the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum QError {
    /// A real parameter lies outside its admissible interval.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    /// An input was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A series or product failed to meet its tail criterion within the term budget.
    #[error("truncation failure in {what} after {terms} terms")]
    TruncationFailure { what: String, terms: usize },

    /// Evaluation requested at (or numerically indistinguishable from) a pole.
    #[error("pole at parameter: {0}")]
    PoleAtParameter(String),

    /// The requested series diverges at the given argument.
    #[error("divergent series: {0}")]
    DivergentSeries(String),

    /// A documented precondition of the identity or transform is not met.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// Step refinement stalled before reaching the target accuracy.
    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    /// The integration ray passes too close to a kernel pole.
    #[error("integration ray within {dist:e} of a kernel pole; rotate the ray angle by about ±0.1")]
    PoleOnRay { dist: f64 },

    /// A Mellin-Barnes abscissa fails to separate the two pole families.
    #[error("abscissa {sigma} outside the separating interval ({lo}, {hi})")]
    BadAbscissa { sigma: f64, lo: f64, hi: f64 },

    /// The evaluation point collides with the discrete transform's pole lattice.
    #[error("point on the discrete pole lattice: {0}")]
    PoleAtLattice(String),

    /// An invalid truncation order for the remainder bound.
    #[error("invalid truncation order: {0}")]
    InvalidN(String),

    /// A zero divisor appeared in the continued-fraction recurrence.
    #[error("zero divisor in continued-fraction recurrence at index {index}")]
    ZeroDivision { index: usize },

    /// A function handle exceeded its declared growth envelope.
    #[error("growth bound violated: {0}")]
    GrowthViolation(String),

    /// An unknown verification suite id.
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, QError>;
