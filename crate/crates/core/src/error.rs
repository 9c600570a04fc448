use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("matrix is not self-adjoint in the weighted inner product (asymmetry {asymmetry:.3e})")]
    NotSelfAdjoint { asymmetry: f64 },

    #[error("operator is not non-negative: eigenvalue {eigenvalue:.3e} below clamp threshold")]
    NegativeSpectrum { eigenvalue: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteAtEigenvalue { eigenvalue: f64 },

    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: error estimate {error:.3e} after {nodes} nodes")]
    Quadrature { error: f64, nodes: usize },

    #[error("profile incompatible with the rate transform: {0}")]
    UnboundedRate(String),

    #[error("value {x} outside the range of the decay profile")]
    OutsideRange { x: f64 },

    #[error("decay profile is not decreasing: M'({t}) = {derivative:.3e}")]
    NotDecreasing { t: f64, derivative: f64 },

    #[error("B too weak for ultracontractivity: {0}")]
    NonIntegrableRate(String),

    #[error("no usable samples: {0}")]
    DegenerateEnsemble(String),

    #[error("time grid too coarse: norm trajectory increases at t = {t}")]
    CoarseGrid { t: f64 },

    #[error("function flag check failed: {0}")]
    FlagViolation(String),

    #[error("truncation K = {k} too small (remainder {remainder:.3e}); try K >= {suggested}")]
    TruncationTooSmall {
        k: usize,
        remainder: f64,
        suggested: usize,
    },

    #[error("classification failed: {0}")]
    Classification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
