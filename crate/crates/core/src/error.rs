/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A linear solve or factorization hit a pivot below the singularity
    /// guard.
    #[error("singular matrix")]
    SingularMatrix,

    /// The eigenvalue iteration exhausted its sweep budget.
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The transition matrix does not have a unique, fully supported
    /// stationary distribution.
    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    /// No benchmark registered under this name.
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    /// A learner update produced a non-finite component or one beyond the
    /// divergence guard. Harness code treats this as a flag, not an abort.
    #[error("learner parameters diverged")]
    Diverged,

    /// Construction-time validation failed (probabilities, policies,
    /// feature maps, config files, ...).
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
