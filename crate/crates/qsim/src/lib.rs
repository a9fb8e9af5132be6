//! Exact statevector simulation of the {H, RY, RZ, CNOT} gate set.
//!
//! A [`StateVector`] holds the full 2^n complex amplitude vector of an
//! n-qubit register in 64-bit precision. Gate application is exact (no
//! shots, no noise) and norm-preserving; per-qubit Pauli-Z expectations
//! are computed by probability weighting over the basis.
//!
//! Qubit ordering convention: **qubit 0 is the least-significant bit** of
//! the basis-state index, so `amps[0b10]` is the amplitude of |q1=1, q0=0⟩.
//! Every per-qubit marginal is a plain bit test under this convention.
//!
//! [`DenseUnitary`] builds the full 2^n × 2^n matrix of a circuit and is
//! the brute-force oracle used by the test suites; it is capped at six
//! qubits because it scales as O(4^n).

mod dense;
mod error;
mod gate;
pub mod rng;
mod state;

pub use dense::{dense_unitary, DenseUnitary, DENSE_ORACLE_MAX_QUBITS};
pub use error::QsimError;
pub use gate::{format_circuit, parse_circuit, Gate};
pub use state::{apply_gate, StateVector, MAX_QUBITS};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, QsimError>;
