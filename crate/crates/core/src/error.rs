use thiserror::Error;

/// Errors raised by the statistical kernels and the procedures built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A one-sided combination was asked for a result pointing the wrong way.
    #[error("direction violation: z-values must be positive for the harmonic mean test (z1 = {z1}, z2 = {z2})")]
    DirectionViolation { z1: f64, z2: f64 },

    /// The pre-market result is too weak for any post-market p-value to reach
    /// overall significance.
    #[error("necessary condition violated: p1 = {p1} exceeds the bound {p1_bound}")]
    NecessaryConditionViolated { p1: f64, p1_bound: f64 },

    /// The truncation interval carries no probability mass.
    #[error("degenerate truncation: interval [{lower}, {upper}] has zero mass")]
    DegenerateTruncation { lower: f64, upper: f64 },

    /// Fisher's criterion is already met by the pre-market trial alone; there
    /// is no post-market level to size a trial against.
    #[error("no post-market trial required: p1 = {p1} is below the Fisher constant {c_f}")]
    NoTrialRequired { p1: f64, c_f: f64 },

    /// Requested variant is not implemented (e.g. odd chi-squared df > 1).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative numerical method failed to reach its tolerance.
    #[error("numerical failure: {message} (estimate {estimate}, error {error}, evaluations {evaluations})")]
    Numerical {
        message: String,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
