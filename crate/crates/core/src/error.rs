use thiserror::Error;

/// Errors raised by the simulation, mitigation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("channel is not a Pauli channel (off-diagonal transfer-matrix entry {0:.3e})")]
    NotPauli(f64),

    #[error("rate {rate} outside the valid range for {what}")]
    RateOutOfRange { what: String, rate: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("purification order must be at least {min}, got {got}")]
    InvalidOrder { min: usize, got: usize },

    #[error("circuit needs {needed} qubits, simulator cap is {cap}")]
    QubitCapExceeded { needed: usize, cap: usize },

    #[error("denominator {0:.3e} below threshold; purification has broken down")]
    DenominatorUnderflow(f64),

    #[error("branch lattice has {branches} branches, exact enumeration cap is {cap}")]
    BranchCapExceeded { branches: u128, cap: usize },

    #[error("error operators are not Hilbert-Schmidt orthogonal (max |tr(E_i E_j^dag)| = {0:.3e})")]
    OrthogonalityViolated(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
