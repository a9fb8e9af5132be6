use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    #[error("non-finite gradient in {name}")]
    NonFiniteGrad { name: String },

    #[error("target id {target} out of vocabulary range {vocab}")]
    TargetOutOfRange { target: u32, vocab: usize },

    #[error("loss has no unmasked target positions")]
    AllPositionsMasked,

    #[error("checkpoint magic mismatch (not a checkpoint file)")]
    BadMagic,

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("checkpoint config disagrees with current config:\n{}", diffs.join("\n"))]
    ConfigMismatch { diffs: Vec<String> },

    #[error("checkpoint tensor set mismatch: {0}")]
    TensorMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] tmodel::ModelError),
}
