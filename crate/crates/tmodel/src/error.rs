use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("token id {token} out of vocabulary range {vocab}")]
    TokenOutOfRange { token: u32, vocab: usize },

    #[error("sequence length {len} exceeds max_position_embeddings {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("prompt must not be empty")]
    EmptyPrompt,

    #[error(transparent)]
    Proj(#[from] qproj::QprojError),
}
