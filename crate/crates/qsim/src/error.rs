use thiserror::Error;

/// Errors produced by the simulator and its oracle.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QsimError {
    /// Register size outside the supported range (configuration error).
    #[error("qubit count {n_qubits} outside supported range 1..={max}")]
    QubitCountOutOfRange { n_qubits: usize, max: usize },

    /// Gate references a qubit the register does not have (usage error).
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },

    /// CNOT with control == target.
    #[error("control and target both reference qubit {index}")]
    ControlEqualsTarget { index: usize },

    /// Dense oracle requested beyond its O(4^n) scope.
    #[error("dense unitary oracle limited to {max} qubits, got {n_qubits}")]
    OracleTooLarge { n_qubits: usize, max: usize },

    /// Malformed line in the debug circuit text format.
    #[error("circuit parse error at line {line}: {reason}")]
    CircuitParse { line: usize, reason: String },
}
