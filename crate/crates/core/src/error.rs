use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operator capability missing: {0}")]
    Capability(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// CG curvature or preconditioned inner product was non-positive.
    #[error("indefinite operator or preconditioner in CG (value {0:e})")]
    Indefinite(f64),

    #[error("Lanczos breakdown at iteration {0}")]
    Breakdown(usize),

    #[error("preconditioner is not positive definite (r'P^-1 r = {0:e})")]
    PreconditionerNotSpd(f64),

    #[error("linear mode not applicable: {0}")]
    Mode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("interior point method did not converge in {0} iterations")]
    IterationLimit(usize),

    #[error("inner solver failed at IPM iteration {ipm_iter}: relative residual {relres:e}")]
    InnerFailure { ipm_iter: usize, relres: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
