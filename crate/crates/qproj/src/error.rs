use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QprojError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("parameter vector length {got} does not match ansatz requirement {expected}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("angle count {got} does not match qubit count {expected}")]
    AngleCountMismatch { expected: usize, got: usize },

    #[error("non-finite loss while differentiating component {index}")]
    NonFiniteLoss { index: usize },

    #[error("FD delta {delta} outside supported range [{min}, {max}]")]
    DeltaOutOfRange { delta: f64, min: f64, max: f64 },

    #[error("invalid ansatz layout: {reason}")]
    InvalidAnsatz { reason: String },

    #[error(transparent)]
    Sim(#[from] qsim::QsimError),
}
