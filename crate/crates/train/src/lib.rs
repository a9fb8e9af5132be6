//! Training machinery: the language-modeling objective, the warmup +
//! cosine-with-restarts schedule, Adam with bias correction, the hybrid
//! train step (analytic backprop for classical parameters; exact adjoint
//! or central finite differences for the quantum variational parameters),
//! and the versioned checkpoint container.

mod adam;
mod checkpoint;
mod error;
mod loss;
mod schedule;
mod step;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    diff_config_texts, load_checkpoint, restore, save_checkpoint, CheckpointData,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use error::TrainError;
pub use loss::{cross_entropy, cross_entropy_with_grad};
pub use schedule::{cosine_annealed, lr_at_step};
pub use step::{train_step, Batch, GradMode, StepStats, TrainConfig};

pub type Result<T> = std::result::Result<T, TrainError>;
