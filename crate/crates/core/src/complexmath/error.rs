use thiserror::Error;

/// Failures of the elementary and special-function layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("argument {re} + {im}i lies on the branch cut (-inf, 0]")]
    BranchCutViolation { re: f64, im: f64 },
    #[error("order {0} is not a non-negative half-integer")]
    UnsupportedOrder(f64),
    #[error("|Im z| = {0} overflows the unscaled evaluation; use the scaled variant")]
    OverflowGuard(f64),
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {error:e}) within depth {depth}")]
    NonConvergence { tol: f64, error: f64, depth: usize },
    #[error("non-finite value produced: {0}")]
    NonFinite(&'static str),
}
