use thiserror::Error;

/// Errors produced by the simulator and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit index {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{n_qubits} qubits exceeds the dense limit of {max} for {what}")]
    SizeLimit {
        what: &'static str,
        n_qubits: usize,
        max: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-real coefficient {value:?} in group {group}, term {term}")]
    NonRealCoefficient {
        group: usize,
        term: usize,
        value: String,
    },

    #[error("non-commuting terms {a} and {b} in group {group}")]
    NonCommutingGroup { group: usize, a: String, b: String },

    #[error("Pauli string {pauli:?} in group {group}, term {term} has length {found}, expected {expected}")]
    LetterLengthMismatch {
        group: usize,
        term: usize,
        pauli: String,
        expected: usize,
        found: usize,
    },

    #[error("support of rho is not contained in support of sigma (weight {weight:.3e} outside)")]
    SupportMismatch { weight: f64 },

    #[error("nonpositive value {value:e} at step {index}; cannot take a logarithm")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("need at least {needed} distinct {what}, found {found}")]
    InsufficientGrid {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("no finite optimum: {0}")]
    NoFiniteOptimum(String),

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
