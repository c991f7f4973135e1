use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown site label {0}")]
    UnknownSite(usize),

    #[error("invalid register: {0}")]
    InvalidRegister(String),

    #[error("matrix is not Hermitian (max entry deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("operator is not traceless (trace {0:e})")]
    NotTraceless(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("empty energy shell ({lower}, {upper}]")]
    EmptyShell { lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not completely positive and trace preserving: {0}")]
    NotCptp(String),

    #[error("state is not Markov on this partition: conditional mutual information {0:e}")]
    MarkovViolation(f64),

    #[error("condition not met: {0}")]
    ConditionNotMet(String),

    #[error("average energies differ by {0:e}")]
    EnergyMismatch(f64),

    #[error("Hamiltonian terms do not commute")]
    NonCommuting,

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("inconsistent certificate: {0}")]
    Certificate(String),

    #[error("missing metadata: {0}")]
    MissingMetadata(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
