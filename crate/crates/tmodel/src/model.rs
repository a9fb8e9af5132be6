use qproj::{FeatureTensor, QuantumProjector};
use qsim::rng::Prng;

use crate::config::{FfnForm, ModelConfig, ReplacementTarget};
use crate::ffn::{FfnGrads, FfnWeights};
use crate::layer::{layer_backward, layer_forward_cached, LayerCache, LayerGrads, LayerWeights};
use crate::linear::{Linear, Projection};
use crate::norm::{layer_norm_backward, layer_norm_cached, NormCache};
use crate::{ModelError, Result};

/// Fixed sinusoidal position vector for position `t` and width `d`.
pub fn sinusoidal_position(t: usize, d: usize) -> Vec<f64> {
    let mut pe = vec![0.0; d];
    for i in 0..d / 2 {
        let freq = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
        pe[2 * i] = (t as f64 * freq).sin();
        if 2 * i + 1 < d {
            pe[2 * i + 1] = (t as f64 * freq).cos();
        }
    }
    pe
}

/// The full hybrid model: tied token embedding, stacked layers, final norm,
/// and an output head that reuses the embedding plus a bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// (vocab × d_model), row-major.
    pub embedding: Vec<f64>,
    pub layers: Vec<LayerWeights>,
    pub final_norm: Vec<f64>,
    pub lm_head_bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModelCache {
    tokens: Vec<u32>,
    batch: usize,
    seq: usize,
    layer_caches: Vec<LayerCache>,
    final_norm_cache: NormCache,
    h_normed: FeatureTensor,
}

#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub embedding: Vec<f64>,
    pub layers: Vec<LayerGrads>,
    pub final_norm: Vec<f64>,
    pub lm_head_bias: Vec<f64>,
}

impl Model {
    /// Builds a freshly initialized model. All draws come from one seeded
    /// PRNG in a fixed order, so identical (config, seed) gives identical
    /// weights.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Prng::new(seed);
        let d = config.hidden_size;
        let bound = 1.0 / (d as f64).sqrt();
        let embedding = (0..config.vocab_size * d)
            .map(|_| rng.uniform(-bound, bound))
            .collect();

        let mut layers = Vec::with_capacity(config.num_layers);
        for _ in 0..config.num_layers {
            layers.push(Self::init_layer(&config, &mut rng)?);
        }

        Ok(Self {
            embedding,
            layers,
            final_norm: vec![1.0; d],
            lm_head_bias: vec![0.0; config.vocab_size],
            config,
        })
    }

    fn init_layer(cfg: &ModelConfig, rng: &mut Prng) -> Result<LayerWeights> {
        let d = cfg.hidden_size;
        let kv_w = cfg.kv_width();
        let inter = cfg.intermediate_size;

        let projection = |replaced: bool,
                          d_in: usize,
                          d_out: usize,
                          bias: bool,
                          per_head: Option<usize>,
                          rng: &mut Prng|
         -> Result<Projection> {
            if !replaced {
                return Ok(Projection::Dense(Linear::init(d_out, d_in, bias, rng)));
            }
            match per_head {
                Some(heads) => {
                    let head_out = d_out / heads;
                    let mut projs = Vec::with_capacity(heads);
                    for _ in 0..heads {
                        projs.push(QuantumProjector::init(d_in, head_out, &cfg.projector, rng)?);
                    }
                    Ok(Projection::QuantumPerHead(projs))
                }
                None => Ok(Projection::Quantum(QuantumProjector::init(
                    d_in,
                    d_out,
                    &cfg.projector,
                    rng,
                )?)),
            }
        };

        let per_head_q = cfg.per_head_projectors.then_some(cfg.num_heads);
        let per_head_kv = cfg.per_head_projectors.then_some(cfg.num_kv_heads);
        let rep = &cfg.replacement;

        let q = projection(rep.contains(ReplacementTarget::Wq), d, d, false, per_head_q, rng)?;
        let k = projection(rep.contains(ReplacementTarget::Wk), d, kv_w, false, per_head_kv, rng)?;
        let v = projection(rep.contains(ReplacementTarget::Wv), d, kv_w, false, per_head_kv, rng)?;
        let o = projection(rep.contains(ReplacementTarget::Wo), d, d, false, None, rng)?;

        let ffn = match cfg.ffn_form {
            FfnForm::Gated => FfnWeights::Gated {
                gate: projection(rep.contains(ReplacementTarget::FfnGate), d, inter, true, None, rng)?,
                up: projection(rep.contains(ReplacementTarget::FfnUp), d, inter, true, None, rng)?,
                down: projection(rep.contains(ReplacementTarget::FfnDown), inter, d, true, None, rng)?,
            },
            FfnForm::Plain => FfnWeights::Plain {
                w1: projection(rep.contains(ReplacementTarget::FfnGate), d, inter, true, None, rng)?,
                w2: projection(rep.contains(ReplacementTarget::FfnDown), inter, d, true, None, rng)?,
            },
        };

        Ok(LayerWeights {
            input_norm: vec![1.0; d],
            q,
            k,
            v,
            o,
            post_attention_norm: vec![1.0; d],
            ffn,
        })
    }

    fn check_tokens(&self, tokens: &[u32], batch: usize, seq: usize) -> Result<()> {
        if tokens.len() != batch * seq {
            return Err(ModelError::ShapeMismatch {
                what: "token batch",
                expected: format!("{} ids", batch * seq),
                got: format!("{} ids", tokens.len()),
            });
        }
        if seq > self.config.max_seq_len {
            return Err(ModelError::SequenceTooLong {
                len: seq,
                max: self.config.max_seq_len,
            });
        }
        for &t in tokens {
            if t as usize >= self.config.vocab_size {
                return Err(ModelError::TokenOutOfRange {
                    token: t,
                    vocab: self.config.vocab_size,
                });
            }
        }
        Ok(())
    }

    fn embed(&self, tokens: &[u32], batch: usize, seq: usize) -> FeatureTensor {
        let d = self.config.hidden_size;
        let mut x = FeatureTensor::zeros(batch, seq, d);
        for b in 0..batch {
            for t in 0..seq {
                let id = tokens[b * seq + t] as usize;
                let emb = &self.embedding[id * d..(id + 1) * d];
                let pos = sinusoidal_position(t, d);
                let row = x.row_mut(b * seq + t);
                for i in 0..d {
                    row[i] = emb[i] + pos[i];
                }
            }
        }
        x
    }

    /// Logits [B, L, V] for a token batch. Inference path (no caches, no
    /// dropout).
    pub fn forward(&self, tokens: &[u32], batch: usize, seq: usize) -> Result<FeatureTensor> {
        self.check_tokens(tokens, batch, seq)?;
        let mut rng = Prng::new(0);
        let mut x = self.embed(tokens, batch, seq);
        for layer in &self.layers {
            x = crate::layer::layer_forward(&x, layer, &self.config, 0.0, false, &mut rng)?;
        }
        let (h_normed, _) = layer_norm_cached(&x, &self.final_norm, self.config.layer_norm_eps);
        Ok(self.head(&h_normed))
    }

    /// Training forward: keeps every cache the backward pass needs.
    /// `dropout_rng` drives the dropout masks when training with a nonzero
    /// rate.
    pub fn forward_cached(
        &self,
        tokens: &[u32],
        batch: usize,
        seq: usize,
        train: bool,
        dropout_rng: &mut Prng,
    ) -> Result<(FeatureTensor, ModelCache)> {
        self.check_tokens(tokens, batch, seq)?;
        let mut x = self.embed(tokens, batch, seq);
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = layer_forward_cached(
                &x,
                layer,
                &self.config,
                self.config.dropout,
                train,
                dropout_rng,
            )?;
            layer_caches.push(cache);
            x = next;
        }
        let (h_normed, final_norm_cache) =
            layer_norm_cached(&x, &self.final_norm, self.config.layer_norm_eps);
        let logits = self.head(&h_normed);
        let cache = ModelCache {
            tokens: tokens.to_vec(),
            batch,
            seq,
            layer_caches,
            final_norm_cache,
            h_normed,
        };
        Ok((logits, cache))
    }

    /// Tied output head: logits = H·Eᵀ + b.
    fn head(&self, h: &FeatureTensor) -> FeatureTensor {
        let (batch, seq, d) = h.shape();
        let v = self.config.vocab_size;
        let mut logits = FeatureTensor::zeros(batch, seq, v);
        for r in 0..h.rows() {
            let h_row = h.row(r);
            let out = logits.row_mut(r);
            for token in 0..v {
                let emb = &self.embedding[token * d..(token + 1) * d];
                let mut acc = self.lm_head_bias[token];
                for (hv, ev) in h_row.iter().zip(emb) {
                    acc += hv * ev;
                }
                out[token] = acc;
            }
        }
        logits
    }

    /// Backward from d(logits); returns gradients for every parameter.
    pub fn backward(&self, cache: &ModelCache, dlogits: &FeatureTensor) -> Result<ModelGrads> {
        let d = self.config.hidden_size;
        let v = self.config.vocab_size;
        let (batch, seq) = (cache.batch, cache.seq);

        let mut d_embedding = vec![0.0; self.embedding.len()];
        let mut d_head_bias = vec![0.0; v];

        // head: logits = H·Eᵀ + b
        let mut dh_normed = FeatureTensor::zeros(batch, seq, d);
        for r in 0..dlogits.rows() {
            let dl_row = dlogits.row(r);
            let h_row = cache.h_normed.row(r);
            let dh_row = dh_normed.row_mut(r);
            for token in 0..v {
                let g = dl_row[token];
                if g == 0.0 {
                    continue;
                }
                d_head_bias[token] += g;
                let emb = &self.embedding[token * d..(token + 1) * d];
                let demb = &mut d_embedding[token * d..(token + 1) * d];
                for i in 0..d {
                    dh_row[i] += g * emb[i];
                    demb[i] += g * h_row[i];
                }
            }
        }

        let (d_final_norm, mut dx) =
            layer_norm_backward(&cache.final_norm_cache, &self.final_norm, &dh_normed);

        let mut layer_grads_rev = Vec::with_capacity(self.layers.len());
        for (layer, lcache) in self.layers.iter().zip(&cache.layer_caches).rev() {
            let (grads, dx_prev) = layer_backward(layer, &self.config, lcache, &dx)?;
            layer_grads_rev.push(grads);
            dx = dx_prev;
        }
        layer_grads_rev.reverse();

        // embedding lookup backward: scatter-add rows
        for b in 0..batch {
            for t in 0..seq {
                let id = cache.tokens[b * seq + t] as usize;
                let demb = &mut d_embedding[id * d..(id + 1) * d];
                let dx_row = dx.row(b * seq + t);
                for i in 0..d {
                    demb[i] += dx_row[i];
                }
            }
        }

        Ok(ModelGrads {
            embedding: d_embedding,
            layers: layer_grads_rev,
            final_norm: d_final_norm,
            lm_head_bias: d_head_bias,
        })
    }

    /// Autoregressive sampling. Temperature 0 picks the argmax (lowest
    /// index on ties); otherwise samples softmax(logits/T) with the seeded
    /// generator. Deterministic given (prompt, seed).
    pub fn generate(
        &self,
        prompt: &[u32],
        max_new: usize,
        temperature: f64,
        seed: u64,
    ) -> Result<Vec<u32>> {
        if prompt.is_empty() {
            return Err(ModelError::EmptyPrompt);
        }
        if temperature < 0.0 {
            return Err(ModelError::InvalidConfig(format!(
                "temperature must be non-negative, got {temperature}"
            )));
        }
        let mut rng = Prng::new(seed);
        let mut tokens = prompt.to_vec();
        for _ in 0..max_new {
            let window_start = tokens.len().saturating_sub(self.config.max_seq_len);
            let window = &tokens[window_start..];
            let logits = self.forward(window, 1, window.len())?;
            let last = logits.row(window.len() - 1);
            let next = if temperature == 0.0 {
                argmax(last) as u32
            } else {
                sample_softmax(last, temperature, &mut rng) as u32
            };
            tokens.push(next);
        }
        Ok(tokens)
    }

    /// Total trainable parameters of the live model.
    pub fn total_params(&self) -> usize {
        self.embedding.len()
            + self
                .layers
                .iter()
                .map(|l| l.param_count())
                .sum::<usize>()
            + self.final_norm.len()
            + self.lm_head_bias.len()
    }

    /// Visits every parameter tensor with its canonical (accounting) name,
    /// in accounting order.
    pub fn visit_params(&self, f: &mut impl FnMut(&str, &[f64])) {
        f("model.embed_tokens.embedding_table", &self.embedding);
        for (i, layer) in self.layers.iter().enumerate() {
            f(&format!("layers.{i}.input_layernorm.weight"), &layer.input_norm);
            layer.q.visit_params(&format!("layers.{i}.self_attn.q_proj"), f);
            layer.k.visit_params(&format!("layers.{i}.self_attn.k_proj"), f);
            layer.v.visit_params(&format!("layers.{i}.self_attn.v_proj"), f);
            layer.o.visit_params(&format!("layers.{i}.self_attn.o_proj"), f);
            f(
                &format!("layers.{i}.post_attention_layernorm.weight"),
                &layer.post_attention_norm,
            );
            match &layer.ffn {
                FfnWeights::Gated { gate, up, down } => {
                    gate.visit_params(&format!("layers.{i}.mlp.gate_proj"), f);
                    down.visit_params(&format!("layers.{i}.mlp.down_proj"), f);
                    up.visit_params(&format!("layers.{i}.mlp.up_proj"), f);
                }
                FfnWeights::Plain { w1, w2 } => {
                    w1.visit_params(&format!("layers.{i}.mlp.fc1"), f);
                    w2.visit_params(&format!("layers.{i}.mlp.fc2"), f);
                }
            }
        }
        f("model.norm.weight", &self.final_norm);
        f("lm_head.bias", &self.lm_head_bias);
    }

    pub fn visit_params_mut(&mut self, f: &mut impl FnMut(&str, &mut [f64])) {
        f("model.embed_tokens.embedding_table", &mut self.embedding);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            f(
                &format!("layers.{i}.input_layernorm.weight"),
                &mut layer.input_norm,
            );
            layer
                .q
                .visit_params_mut(&format!("layers.{i}.self_attn.q_proj"), f);
            layer
                .k
                .visit_params_mut(&format!("layers.{i}.self_attn.k_proj"), f);
            layer
                .v
                .visit_params_mut(&format!("layers.{i}.self_attn.v_proj"), f);
            layer
                .o
                .visit_params_mut(&format!("layers.{i}.self_attn.o_proj"), f);
            f(
                &format!("layers.{i}.post_attention_layernorm.weight"),
                &mut layer.post_attention_norm,
            );
            match &mut layer.ffn {
                FfnWeights::Gated { gate, up, down } => {
                    gate.visit_params_mut(&format!("layers.{i}.mlp.gate_proj"), f);
                    down.visit_params_mut(&format!("layers.{i}.mlp.down_proj"), f);
                    up.visit_params_mut(&format!("layers.{i}.mlp.up_proj"), f);
                }
                FfnWeights::Plain { w1, w2 } => {
                    w1.visit_params_mut(&format!("layers.{i}.mlp.fc1"), f);
                    w2.visit_params_mut(&format!("layers.{i}.mlp.fc2"), f);
                }
            }
        }
        f("model.norm.weight", &mut self.final_norm);
        f("lm_head.bias", &mut self.lm_head_bias);
    }

    /// Flat count of quantum variational parameters across all layers.
    pub fn quantum_param_count(&self) -> usize {
        let mut count = 0;
        self.visit_params(&mut |name, values| {
            if name.ends_with("mq_layers.0.weight") {
                count += values.len();
            }
        });
        count
    }
}

impl ModelGrads {
    /// Same names and order as [`Model::visit_params`].
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&str, &'a [f64])) {
        f("model.embed_tokens.embedding_table", &self.embedding);
        for (i, layer) in self.layers.iter().enumerate() {
            f(&format!("layers.{i}.input_layernorm.weight"), &layer.input_norm);
            Projection::visit_grads(&layer.q, &format!("layers.{i}.self_attn.q_proj"), f);
            Projection::visit_grads(&layer.k, &format!("layers.{i}.self_attn.k_proj"), f);
            Projection::visit_grads(&layer.v, &format!("layers.{i}.self_attn.v_proj"), f);
            Projection::visit_grads(&layer.o, &format!("layers.{i}.self_attn.o_proj"), f);
            f(
                &format!("layers.{i}.post_attention_layernorm.weight"),
                &layer.post_attention_norm,
            );
            match &layer.ffn {
                FfnGrads::Gated { gate, up, down } => {
                    Projection::visit_grads(gate, &format!("layers.{i}.mlp.gate_proj"), f);
                    Projection::visit_grads(down, &format!("layers.{i}.mlp.down_proj"), f);
                    Projection::visit_grads(up, &format!("layers.{i}.mlp.up_proj"), f);
                }
                FfnGrads::Plain { w1, w2 } => {
                    Projection::visit_grads(w1, &format!("layers.{i}.mlp.fc1"), f);
                    Projection::visit_grads(w2, &format!("layers.{i}.mlp.fc2"), f);
                }
            }
        }
        f("model.norm.weight", &self.final_norm);
        f("lm_head.bias", &self.lm_head_bias);
    }
}

/// Applies `f(name, params, grads)` to every aligned (parameter, gradient)
/// slice pair, in the canonical order.
pub fn visit_params_and_grads_mut(
    model: &mut Model,
    grads: &ModelGrads,
    f: &mut impl FnMut(&str, &mut [f64], &[f64]),
) {
    let mut grad_list: Vec<(String, &[f64])> = Vec::new();
    grads.visit(&mut |name, g| {
        grad_list.push((name.to_string(), g));
    });
    // SAFETY of the zip: Model::visit_params_mut and ModelGrads::visit emit
    // identical name sequences by construction; the debug assert guards it.
    let mut idx = 0;
    model.visit_params_mut(&mut |name, params| {
        let (gname, g) = &grad_list[idx];
        debug_assert_eq!(name, gname, "parameter/gradient visitation order");
        f(name, params, g);
        idx += 1;
    });
    debug_assert_eq!(idx, grad_list.len());
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn sample_softmax(logits: &[f64], temperature: f64, rng: &mut Prng) -> usize {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .map(|l| ((l - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut dart = rng.next_f64() * total;
    for (i, w) in weights.iter().enumerate() {
        dart -= w;
        if dart <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}
