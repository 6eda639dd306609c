use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid theory parameters: {0}")]
    InvalidTheory(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("states belong to different theories (beta/mu mismatch)")]
    TheoryMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("infeasible step: {0}")]
    InfeasibleStep(String),

    /// Some probability is zero, so the log-linear fit is undefined.
    #[error("state has zero probabilities; a Gibbs fit is not defined")]
    NotFittable,

    /// The (-E, n, 1) design is rank deficient, so (beta, mu) cannot both be identified.
    #[error("spectrum does not determine (beta, mu): {0}")]
    Underdetermined(String),

    #[error("alpha = 1 is the relative entropy; call relative_entropy instead")]
    UseRelativeEntropy,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("battery has no level at energy {energy} (particles {particles})")]
    MissingBatteryLevel { energy: f64, particles: f64 },

    #[error("target state is at equilibrium; the conversion rate is infinite")]
    InfiniteRate,
}
