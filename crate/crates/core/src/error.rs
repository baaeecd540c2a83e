use thiserror::Error;

/// Unified error type for every module in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A'| = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal max {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("moment order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("exponent {exponent:.6e} exceeds the safe range |x| <= {limit}")]
    RangeExceeded { exponent: f64, limit: f64 },

    #[error("enumeration of {size:.3e} sequences exceeds the brute-force budget {limit:.3e}")]
    TooLarge { size: f64, limit: f64 },

    #[error("all escape probabilities lie below {floor:.1e}; the log-log fit is degenerate")]
    DegenerateFit { floor: f64 },

    #[error("no nontrivial sign change of G(i eps) - 1 inside [{lo:.6}, {hi:.6}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("nontrivial root collapses into the exclusion radius {delta:.3e} around eps = 0")]
    DegenerateRoot { delta: f64 },

    #[error("observable commutes with the averaged evolution (zeta = 0); no mixing limit exists")]
    DegenerateObservable,

    #[error("independent evaluation routes disagree by {difference:.3e} (allowed {tol:.3e})")]
    RouteMismatch { difference: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
