use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("matrix is not unitary (max deviation {deviation})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid qubit set: {0}")]
    InvalidCut(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measurement branch has zero probability ({probability})")]
    ZeroProbabilityBranch { probability: f64 },

    #[error("exchange constraints violated: {0:?}")]
    ConstraintsViolated(Vec<String>),

    #[error("residual pair state is not maximally entangled (deviation {deviation})")]
    NotMaximallyEntangled { deviation: f64 },

    #[error("register of {n_qubits} qubits exceeds the enumeration limit of {limit}")]
    RegisterTooLarge { n_qubits: usize, limit: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}
