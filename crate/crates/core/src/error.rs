use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,

    #[error("qubit index sets overlap or repeat: {0:?}")]
    OverlappingQubits(Vec<usize>),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm or trace {value})")]
    NotNormalized { value: f64 },

    #[error("expected {expected} parameters, got {actual}")]
    ParamCount { expected: usize, actual: usize },

    #[error("unsupported circuit size: {0} qubits")]
    UnsupportedQubits(usize),

    #[error("noise parameter {name} = {value} outside [{min}, {max}]")]
    NoiseOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("cross-talk with s = {0} requires at least one ancilla")]
    SwapWithoutAncillas(f64),

    #[error("post-selection impossible: success probability {raw_trace:.3e}")]
    PostSelectionImpossible { raw_trace: f64 },

    #[error("invalid pipeline configuration: {0}")]
    InvalidPipeline(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("every optimizer restart failed")]
    AllRestartsFailed,

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
