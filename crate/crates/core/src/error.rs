use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("outside the domain of the closed form: {0}")]
    Domain(String),

    #[error("mode at k = {k} is evanescent (radicand {radicand:e})")]
    EvanescentMode { k: f64, radicand: f64 },

    #[error("eigenvalues of M\u{39b} could not be paired as \u{b1}\u{3b5} (worst mismatch {mismatch:e})")]
    PairingFailure { mismatch: f64 },

    #[error("spectrum is dynamically unstable (max |Im| = {max_imag:e})")]
    Instability { max_imag: f64 },

    #[error("no minimization start converged (best gradient norm {best_grad_norm:e})")]
    ConvergenceFailure { best_grad_norm: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenSolver,

    #[error("no phase matched: {0}")]
    UnclassifiedPhase(String),

    #[error("exponent fit failed: {0}")]
    FitError(String),

    #[error("labels flicker inside the bisection interval [{lo}, {hi}]")]
    BisectionAmbiguous { lo: f64, hi: f64 },

    #[error("boundary curves do not cross in [{lo}, {hi}]")]
    NoIntersection { lo: f64, hi: f64 },

    #[error("Hilbert dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: u64, cap: u64 },

    #[error("Lanczos did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
