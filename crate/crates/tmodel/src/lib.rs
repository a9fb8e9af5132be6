//! Decoder-only transformer with grouped key/value heads where any linear
//! projection (q/k/v/o, FFN gate/up/down) can be swapped for the hybrid
//! quantum projection module.
//!
//! Layer structure is pre-norm residual: X plus Drop(MHA(LN(X))), then
//! plus Drop(FFN(LN(of the intermediate))). Norms carry a weight vector
//! only; attention projections are bias-free; FFN projections are biased;
//! the output head ties the input embedding and adds only a bias.
//! Positions are fixed sinusoidal embeddings added to the token embedding.
//!
//! Every forward operation has a cached twin that retains what the
//! hand-written backward pass needs; gradients for quantum projections go
//! through the exact adjoint in `qproj`.

mod attention;
mod config;
mod error;
mod ffn;
mod layer;
mod linear;
mod model;
mod norm;

pub use attention::{attention, attention_backward, attention_cached, causal_mask, AttnCache};
pub use config::{FfnForm, ModelConfig, ReplacementStrategy, ReplacementTarget};
pub use error::ModelError;
pub use ffn::{FfnCache, FfnGrads, FfnWeights};
pub use layer::{layer_forward, layer_forward_cached, multi_head, LayerCache, LayerGrads, LayerWeights};
pub use linear::{Linear, LinearGrads, ProjCache, Projection, ProjectionGrads};
pub use model::{
    sinusoidal_position, visit_params_and_grads_mut, Model, ModelCache, ModelGrads,
};
pub use norm::{layer_norm, layer_norm_backward, layer_norm_cached, NormCache};

pub type Result<T> = std::result::Result<T, ModelError>;
