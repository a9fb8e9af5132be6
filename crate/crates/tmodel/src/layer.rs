use qproj::FeatureTensor;
use qsim::rng::Prng;

use crate::attention::{attention_backward, attention_cached, causal_mask, AttnCache};
use crate::ffn::{FfnCache, FfnGrads, FfnWeights};
use crate::linear::{ProjCache, Projection, ProjectionGrads};
use crate::norm::{layer_norm_backward, layer_norm_cached, NormCache};
use crate::{ModelConfig, Result};

/// One transformer layer: norms, the four attention projections, and the
/// FFN body. Norms carry a weight only (β is fixed at zero; the accounting
/// tables list no norm biases).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub input_norm: Vec<f64>,
    pub q: Projection,
    pub k: Projection,
    pub v: Projection,
    pub o: Projection,
    pub post_attention_norm: Vec<f64>,
    pub ffn: FfnWeights,
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    ln1: NormCache,
    q_cache: ProjCache,
    k_cache: ProjCache,
    v_cache: ProjCache,
    attn: AttnCache,
    o_cache: ProjCache,
    attn_dropout_mask: Option<Vec<f64>>,
    ln2: NormCache,
    ffn: FfnCache,
    ffn_dropout_mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub input_norm: Vec<f64>,
    pub q: ProjectionGrads,
    pub k: ProjectionGrads,
    pub v: ProjectionGrads,
    pub o: ProjectionGrads,
    pub post_attention_norm: Vec<f64>,
    pub ffn: FfnGrads,
}

fn dropout_mask(len: usize, rate: f64, rng: &mut Prng) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..len)
        .map(|_| if rng.next_f64() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

fn apply_mask(x: &mut FeatureTensor, mask: &[f64]) {
    for (v, m) in x.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
}

/// Multi-head attention sublayer body on already-normalized input:
/// project Q/K/V (quantum where replaced), grouped-KV causal attention,
/// concatenate heads, apply the output projection.
pub fn multi_head(x: &FeatureTensor, layer: &LayerWeights, cfg: &ModelConfig) -> Result<FeatureTensor> {
    let (_, seq, _) = x.shape();
    let mask = causal_mask(seq);
    let q = layer.q.forward(x)?;
    let k = layer.k.forward(x)?;
    let v = layer.v.forward(x)?;
    let ctx = crate::attention::attention(&q, &k, &v, &mask, cfg.num_heads, cfg.num_kv_heads)?;
    layer.o.forward(&ctx)
}

/// Pre-norm residual layer exactly as written:
/// X + Drop(MultiHead(LN(X))), then + Drop(FFN(LN(·))).
pub fn layer_forward(
    x: &FeatureTensor,
    layer: &LayerWeights,
    cfg: &ModelConfig,
    dropout_rate: f64,
    train: bool,
    rng: &mut Prng,
) -> Result<FeatureTensor> {
    let (out, _) = layer_forward_cached(x, layer, cfg, dropout_rate, train, rng)?;
    Ok(out)
}

pub fn layer_forward_cached(
    x: &FeatureTensor,
    layer: &LayerWeights,
    cfg: &ModelConfig,
    dropout_rate: f64,
    train: bool,
    rng: &mut Prng,
) -> Result<(FeatureTensor, LayerCache)> {
    let (_, seq, _) = x.shape();
    let mask = causal_mask(seq);
    let use_dropout = train && dropout_rate > 0.0;

    // attention sublayer
    let (a1, ln1) = layer_norm_cached(x, &layer.input_norm, cfg.layer_norm_eps);
    let (q, q_cache) = layer.q.forward_cached(&a1)?;
    let (k, k_cache) = layer.k.forward_cached(&a1)?;
    let (v, v_cache) = layer.v.forward_cached(&a1)?;
    let (ctx, attn) = attention_cached(&q, &k, &v, &mask, cfg.num_heads, cfg.num_kv_heads)?;
    let (mut attn_out, o_cache) = layer.o.forward_cached(&ctx)?;
    let attn_dropout_mask = use_dropout.then(|| {
        let m = dropout_mask(attn_out.data().len(), dropout_rate, rng);
        apply_mask(&mut attn_out, &m);
        m
    });
    let mut x2 = x.clone();
    for (a, b) in x2.data_mut().iter_mut().zip(attn_out.data()) {
        *a += b;
    }

    // feed-forward sublayer
    let (a2, ln2) = layer_norm_cached(&x2, &layer.post_attention_norm, cfg.layer_norm_eps);
    let (mut ffn_out, ffn_cache) = layer.ffn.forward_cached(&a2)?;
    let ffn_dropout_mask = use_dropout.then(|| {
        let m = dropout_mask(ffn_out.data().len(), dropout_rate, rng);
        apply_mask(&mut ffn_out, &m);
        m
    });
    let mut out = x2.clone();
    for (a, b) in out.data_mut().iter_mut().zip(ffn_out.data()) {
        *a += b;
    }

    let cache = LayerCache {
        ln1,
        q_cache,
        k_cache,
        v_cache,
        attn,
        o_cache,
        attn_dropout_mask,
        ln2,
        ffn: ffn_cache,
        ffn_dropout_mask,
    };
    Ok((out, cache))
}

pub fn layer_backward(
    layer: &LayerWeights,
    cfg: &ModelConfig,
    cache: &LayerCache,
    dout: &FeatureTensor,
) -> Result<(LayerGrads, FeatureTensor)> {
    // FFN sublayer: out = x2 + Drop(FFN(LN2(x2)))
    let mut dffn_out = dout.clone();
    if let Some(mask) = &cache.ffn_dropout_mask {
        apply_mask(&mut dffn_out, mask);
    }
    let (ffn_grads, da2) = layer.ffn.backward(&cache.ffn, &dffn_out)?;
    let (dln2_gamma, dx2_from_ffn) =
        layer_norm_backward(&cache.ln2, &layer.post_attention_norm, &da2);
    let mut dx2 = dout.clone();
    for (a, b) in dx2.data_mut().iter_mut().zip(dx2_from_ffn.data()) {
        *a += b;
    }

    // attention sublayer: x2 = x + Drop(O(Attn(Q,K,V)))
    let mut dattn_out = dx2.clone();
    if let Some(mask) = &cache.attn_dropout_mask {
        apply_mask(&mut dattn_out, mask);
    }
    let (o_grads, dctx) = layer.o.backward(&cache.o_cache, &dattn_out)?;
    let (dq, dk, dv) = attention_backward(&cache.attn, &dctx, cfg.num_heads, cfg.num_kv_heads);
    let (q_grads, da1_q) = layer.q.backward(&cache.q_cache, &dq)?;
    let (k_grads, da1_k) = layer.k.backward(&cache.k_cache, &dk)?;
    let (v_grads, da1_v) = layer.v.backward(&cache.v_cache, &dv)?;
    let mut da1 = da1_q;
    for (a, (b, c)) in da1
        .data_mut()
        .iter_mut()
        .zip(da1_k.data().iter().zip(da1_v.data()))
    {
        *a += b + c;
    }
    let (dln1_gamma, dx_from_attn) = layer_norm_backward(&cache.ln1, &layer.input_norm, &da1);
    let mut dx = dx2;
    for (a, b) in dx.data_mut().iter_mut().zip(dx_from_attn.data()) {
        *a += b;
    }

    let grads = LayerGrads {
        input_norm: dln1_gamma,
        q: q_grads,
        k: k_grads,
        v: v_grads,
        o: o_grads,
        post_attention_norm: dln2_gamma,
        ffn: ffn_grads,
    };
    Ok((grads, dx))
}

impl LayerWeights {
    pub fn param_count(&self) -> usize {
        self.input_norm.len()
            + self.q.param_count()
            + self.k.param_count()
            + self.v.param_count()
            + self.o.param_count()
            + self.post_attention_norm.len()
            + self.ffn.param_count()
    }
}
