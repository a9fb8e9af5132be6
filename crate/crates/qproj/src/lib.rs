//! The hybrid quantum projection module: a drop-in replacement for a
//! classical linear layer built from three stages (learnable compression
//! to 2·n_q features, a variational quantum circuit over n_q qubits, and
//! learnable expansion back to the output width).
//!
//! Dataflow per call: `compress` (affine + tanh) → `flatten_batch` →
//! per-row {angle encoding → encoded product state → ansatz evolution →
//! per-qubit ⟨Z⟩ measurement} → `unflatten_batch` → `expand` (affine +
//! GELU). Rows are independent quantum circuit instances and may be
//! evaluated in parallel; all reductions run in fixed row order so results
//! are bit-identical regardless of thread count.
//!
//! Two gradient engines cover the variational parameters: an exact adjoint
//! walk through the simulated statevector (the production path, also
//! supplying input-side gradients), and central finite differences (the
//! verification oracle and the selectable hardware-fidelity mode).

mod ansatz;
mod circuit;
mod encode;
mod error;
mod grad;
pub mod math;
mod projector;
mod tensor;

pub use ansatz::{AnsatzDescriptor, AnsatzSlot, AnsatzVariant, RotationAxis};
pub use circuit::{
    adjoint_gradients, ansatz_gates, apply_ansatz, circuit_to_text, full_circuit, run_circuit,
    BoundGate, CircuitGradients, ParamBinding,
};
pub use encode::{build_encoded_state, encode_angles};
pub use error::QprojError;
pub use grad::quantum_grad_fd;
pub use projector::{
    compress, expand, ExpandMode, ProjectorCache, ProjectorConfig, ProjectorGrads,
    QuantumProjector, RowExecution,
};
pub use tensor::{flatten_batch, unflatten_batch, FeatureTensor, Matrix};

pub type Result<T> = std::result::Result<T, QprojError>;

/// FD step-size range within which central differences stay accurate in
/// double precision.
pub const FD_DELTA_MIN: f64 = 1e-4;
pub const FD_DELTA_MAX: f64 = 1e-3;
