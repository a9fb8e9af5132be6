use qproj::FeatureTensor;

use crate::{ModelError, Result};

/// Additive causal mask: 0 on and below the diagonal, −∞ above, row-major
/// `[t][s]`.
pub fn causal_mask(seq_len: usize) -> Vec<f64> {
    let mut mask = vec![0.0; seq_len * seq_len];
    for t in 0..seq_len {
        for s in t + 1..seq_len {
            mask[t * seq_len + s] = f64::NEG_INFINITY;
        }
    }
    mask
}

/// Scaled dot-product attention with grouped KV heads:
/// softmax(QKᵀ/√d_k + mask)·V. Q is [B, L, h·d_k]; K and V are
/// [B, L, h_kv·d_k]; each KV head serves num_heads/num_kv_heads query heads.
pub fn attention(
    q: &FeatureTensor,
    k: &FeatureTensor,
    v: &FeatureTensor,
    mask: &[f64],
    num_heads: usize,
    num_kv_heads: usize,
) -> Result<FeatureTensor> {
    let (out, _) = attention_cached(q, k, v, mask, num_heads, num_kv_heads)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AttnCache {
    /// Attention probabilities, [B, h, L, L] row-major.
    pub probs: Vec<f64>,
    pub q: FeatureTensor,
    pub k: FeatureTensor,
    pub v: FeatureTensor,
}

pub fn attention_cached(
    q: &FeatureTensor,
    k: &FeatureTensor,
    v: &FeatureTensor,
    mask: &[f64],
    num_heads: usize,
    num_kv_heads: usize,
) -> Result<(FeatureTensor, AttnCache)> {
    let (batch, seq, q_width) = q.shape();
    let (kb, ks, kv_width) = k.shape();
    if (kb, ks) != (batch, seq) || v.shape() != (batch, seq, kv_width) {
        return Err(ModelError::ShapeMismatch {
            what: "attention inputs",
            expected: format!("K/V [{batch}, {seq}, ...] matching Q"),
            got: format!("K {:?}, V {:?}", k.shape(), v.shape()),
        });
    }
    if q_width % num_heads != 0 || kv_width != (q_width / num_heads) * num_kv_heads {
        return Err(ModelError::ShapeMismatch {
            what: "attention head widths",
            expected: format!("Q divisible into {num_heads} heads, KV width {num_kv_heads}·d_k"),
            got: format!("q_width {q_width}, kv_width {kv_width}"),
        });
    }
    if mask.len() != seq * seq {
        return Err(ModelError::ShapeMismatch {
            what: "attention mask",
            expected: format!("{}", seq * seq),
            got: format!("{}", mask.len()),
        });
    }

    let d_k = q_width / num_heads;
    let group = num_heads / num_kv_heads;
    let scale = 1.0 / (d_k as f64).sqrt();

    let mut probs = vec![0.0; batch * num_heads * seq * seq];
    let mut out = FeatureTensor::zeros(batch, seq, q_width);

    for b in 0..batch {
        for h in 0..num_heads {
            let kv = h / group;
            for t in 0..seq {
                let q_row = &q.row(b * seq + t)[h * d_k..(h + 1) * d_k];
                // scores for this query position
                let mut scores = vec![f64::NEG_INFINITY; seq];
                let mut max_score = f64::NEG_INFINITY;
                for s in 0..seq {
                    let m = mask[t * seq + s];
                    if m == f64::NEG_INFINITY {
                        continue;
                    }
                    let k_row = &k.row(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    let dot: f64 = q_row.iter().zip(k_row).map(|(a, c)| a * c).sum();
                    let score = dot * scale + m;
                    scores[s] = score;
                    max_score = max_score.max(score);
                }
                // softmax; masked entries contribute exactly zero weight
                let mut denom = 0.0;
                for s in 0..seq {
                    if scores[s] != f64::NEG_INFINITY {
                        scores[s] = (scores[s] - max_score).exp();
                        denom += scores[s];
                    } else {
                        scores[s] = 0.0;
                    }
                }
                let p_base = ((b * num_heads + h) * seq + t) * seq;
                for s in 0..seq {
                    probs[p_base + s] = scores[s] / denom;
                }
                let out_row = &mut out.row_mut(b * seq + t)[h * d_k..(h + 1) * d_k];
                for s in 0..seq {
                    let p = probs[p_base + s];
                    if p == 0.0 {
                        continue;
                    }
                    let v_row = &v.row(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    for (o, vv) in out_row.iter_mut().zip(v_row) {
                        *o += p * vv;
                    }
                }
            }
        }
    }

    let cache = AttnCache {
        probs,
        q: q.clone(),
        k: k.clone(),
        v: v.clone(),
    };
    Ok((out, cache))
}

/// Backward pass; returns (dQ, dK, dV). KV gradients accumulate across the
/// query heads sharing each KV head.
pub fn attention_backward(
    cache: &AttnCache,
    dctx: &FeatureTensor,
    num_heads: usize,
    num_kv_heads: usize,
) -> (FeatureTensor, FeatureTensor, FeatureTensor) {
    let (batch, seq, q_width) = cache.q.shape();
    let (_, _, kv_width) = cache.k.shape();
    let d_k = q_width / num_heads;
    let group = num_heads / num_kv_heads;
    let scale = 1.0 / (d_k as f64).sqrt();

    let mut dq = FeatureTensor::zeros(batch, seq, q_width);
    let mut dk = FeatureTensor::zeros(batch, seq, kv_width);
    let mut dv = FeatureTensor::zeros(batch, seq, kv_width);

    for b in 0..batch {
        for h in 0..num_heads {
            let kv = h / group;
            for t in 0..seq {
                let p_base = ((b * num_heads + h) * seq + t) * seq;
                let dctx_row = &dctx.row(b * seq + t)[h * d_k..(h + 1) * d_k];

                // dP and the softmax reduction term; zero-probability
                // entries (masked positions) contribute nothing
                let mut dp = vec![0.0; seq];
                let mut dot_dp_p = 0.0;
                for s in 0..seq {
                    let p = cache.probs[p_base + s];
                    if p == 0.0 {
                        continue;
                    }
                    let v_row = &cache.v.row(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    let d: f64 = dctx_row.iter().zip(v_row).map(|(a, c)| a * c).sum();
                    dp[s] = d;
                    dot_dp_p += d * p;
                    // dV while we have the probability at hand
                    let dv_row = &mut dv.row_mut(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    for (dvv, dc) in dv_row.iter_mut().zip(dctx_row) {
                        *dvv += p * dc;
                    }
                }
                for s in 0..seq {
                    let p = cache.probs[p_base + s];
                    if p == 0.0 {
                        continue;
                    }
                    let dscore = p * (dp[s] - dot_dp_p);
                    let q_row = &cache.q.row(b * seq + t)[h * d_k..(h + 1) * d_k];
                    let k_row = &cache.k.row(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    let dq_row = &mut dq.row_mut(b * seq + t)[h * d_k..(h + 1) * d_k];
                    for i in 0..d_k {
                        dq_row[i] += dscore * k_row[i] * scale;
                    }
                    let dk_row = &mut dk.row_mut(b * seq + s)[kv * d_k..(kv + 1) * d_k];
                    for i in 0..d_k {
                        dk_row[i] += dscore * q_row[i] * scale;
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}
