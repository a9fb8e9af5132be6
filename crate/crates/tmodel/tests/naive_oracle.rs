//! Flat scalar-loop recomputations of attention, the FFN, and the whole
//! model on tiny shapes. The oracles here share no code with the library
//! paths they check: softmax, normalization, GELU and the head are all
//! re-derived with explicit loops.

use std::collections::HashMap;

use qproj::FeatureTensor;
use qsim::rng::Prng;
use tmodel::{
    attention, causal_mask, layer_forward, FfnWeights, Linear, Model, ModelConfig, Projection,
    ReplacementStrategy,
};

fn gelu_ref(x: f64) -> f64 {
    x * 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn softmax_ref(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Random 2-head, grouped-KV, L=4 attention against the naive O(L²) loops.
#[test]
fn attention_matches_naive_recomputation() {
    let mut rng = Prng::new(0xa77);
    let (seq, heads, kv_heads, d_k) = (4usize, 2usize, 1usize, 3usize);
    let q_width = heads * d_k;
    let kv_width = kv_heads * d_k;
    let q_data: Vec<f64> = (0..seq * q_width).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let k_data: Vec<f64> = (0..seq * kv_width).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let v_data: Vec<f64> = (0..seq * kv_width).map(|_| rng.uniform(-1.0, 1.0)).collect();

    let q = FeatureTensor::from_vec(1, seq, q_width, q_data.clone()).unwrap();
    let k = FeatureTensor::from_vec(1, seq, kv_width, k_data.clone()).unwrap();
    let v = FeatureTensor::from_vec(1, seq, kv_width, v_data.clone()).unwrap();
    let out = attention(&q, &k, &v, &causal_mask(seq), heads, kv_heads).unwrap();

    let scale = 1.0 / (d_k as f64).sqrt();
    for h in 0..heads {
        for t in 0..seq {
            // causal scores for query t
            let mut scores = Vec::new();
            for s in 0..=t {
                let mut dot = 0.0;
                for i in 0..d_k {
                    dot += q_data[t * q_width + h * d_k + i] * k_data[s * kv_width + i];
                }
                scores.push(dot * scale);
            }
            let probs = softmax_ref(&scores);
            for i in 0..d_k {
                let mut expected = 0.0;
                for (s, p) in probs.iter().enumerate() {
                    expected += p * v_data[s * kv_width + i];
                }
                let got = out.at(0, t, h * d_k + i);
                assert!(
                    (got - expected).abs() < 1e-12,
                    "head {h}, t {t}, i {i}: {got} vs {expected}"
                );
            }
        }
    }
}

/// Classical gated FFN on a 1×2×8 input against elementwise recomputation.
#[test]
fn ffn_matches_naive_recomputation() {
    let mut rng = Prng::new(0xff9);
    let (d, inter) = (8usize, 5usize);
    let gate = Linear::init(inter, d, true, &mut rng);
    let up = Linear::init(inter, d, true, &mut rng);
    let down = Linear::init(d, inter, true, &mut rng);
    let ffn = FfnWeights::Gated {
        gate: Projection::Dense(gate.clone()),
        up: Projection::Dense(up.clone()),
        down: Projection::Dense(down.clone()),
    };
    let x_data: Vec<f64> = (0..2 * d).map(|_| rng.uniform(-1.5, 1.5)).collect();
    let x = FeatureTensor::from_vec(1, 2, d, x_data.clone()).unwrap();
    let out = ffn.forward(&x).unwrap();

    for t in 0..2 {
        let row = &x_data[t * d..(t + 1) * d];
        let mut hidden = vec![0.0; inter];
        for o in 0..inter {
            let mut g = gate.b.as_ref().unwrap()[o];
            let mut u = up.b.as_ref().unwrap()[o];
            for i in 0..d {
                g += gate.w[o * d + i] * row[i];
                u += up.w[o * d + i] * row[i];
            }
            hidden[o] = gelu_ref(g) * u;
        }
        for o in 0..d {
            let mut acc = down.b.as_ref().unwrap()[o];
            for i in 0..inter {
                acc += down.w[o * inter + i] * hidden[i];
            }
            assert!((out.at(0, t, o) - acc).abs() < 1e-12);
        }
    }
}

#[test]
fn ffn_zero_gate_preactivation_kills_output() {
    let mut rng = Prng::new(4);
    let (d, inter) = (4usize, 6usize);
    let mut gate = Linear::init(inter, d, true, &mut rng);
    gate.w.iter_mut().for_each(|w| *w = 0.0);
    let ffn = FfnWeights::Gated {
        gate: Projection::Dense(gate),
        up: Projection::Dense(Linear::init(inter, d, true, &mut rng)),
        down: Projection::Dense(Linear::init(d, inter, false, &mut rng)),
    };
    let x = FeatureTensor::from_vec(1, 1, d, vec![0.4, -0.2, 0.9, 1.3]).unwrap();
    let out = ffn.forward(&x).unwrap();
    // GELU(0) = 0 annihilates the gated product, and down has no bias
    assert!(out.data().iter().all(|v| v.abs() < 1e-15));
}

/// Zero attention and FFN weights reduce the layer to the identity map.
#[test]
fn layer_is_pure_residual_when_weights_vanish(){
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 7;
    cfg.hidden_size = 8;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.num_kv_heads = 1;
    cfg.intermediate_size = 6;
    cfg.max_seq_len = 8;
    let mut rng = Prng::new(11);
    let zero_linear = |out, inp, bias: bool| {
        let mut l = Linear::init(out, inp, bias, &mut Prng::new(0));
        l.w.iter_mut().for_each(|w| *w = 0.0);
        l
    };
    let layer = tmodel::LayerWeights {
        input_norm: vec![1.0; 8],
        q: Projection::Dense(zero_linear(8, 8, false)),
        k: Projection::Dense(zero_linear(4, 8, false)),
        v: Projection::Dense(zero_linear(4, 8, false)),
        o: Projection::Dense(zero_linear(8, 8, false)),
        post_attention_norm: vec![1.0; 8],
        ffn: FfnWeights::Gated {
            gate: Projection::Dense(zero_linear(6, 8, true)),
            up: Projection::Dense(zero_linear(6, 8, true)),
            down: Projection::Dense(zero_linear(8, 6, true)),
        },
    };
    let x_data: Vec<f64> = (0..3 * 8).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let x = FeatureTensor::from_vec(1, 3, 8, x_data.clone()).unwrap();
    let out = layer_forward(&x, &layer, &cfg, 0.0, false, &mut rng).unwrap();
    assert_eq!(out.data(), x_data.as_slice());
}

/// End-to-end logits against a complete scalar recomputation on a 2-token
/// classical toy config.
#[test]
fn model_forward_matches_full_naive_recomputation() {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 11;
    cfg.hidden_size = 8;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.num_kv_heads = 1;
    cfg.intermediate_size = 12;
    cfg.max_seq_len = 16;
    cfg.replacement = ReplacementStrategy::none();
    let model = Model::init(cfg.clone(), 0x5a1e).unwrap();

    let mut weights: HashMap<String, Vec<f64>> = HashMap::new();
    model.visit_params(&mut |name, values| {
        weights.insert(name.to_string(), values.to_vec());
    });
    let w = |name: &str| weights.get(name).unwrap_or_else(|| panic!("missing {name}"));

    let tokens = [4u32, 9];
    let logits = model.forward(&tokens, 1, 2).unwrap();

    // ---- independent recomputation ----
    let (d, heads, kv_heads, inter, vocab, seq) = (8usize, 2usize, 1usize, 12usize, 11usize, 2usize);
    let d_k = d / heads;

    let layer_norm_ref = |x: &[f64], gamma: &[f64]| -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(i, v)| (v - mean) / (var + 1e-5).sqrt() * gamma[i])
            .collect()
    };
    let matvec = |w: &[f64], x: &[f64], out_dim: usize, b: Option<&[f64]>| -> Vec<f64> {
        (0..out_dim)
            .map(|o| {
                let mut acc = b.map_or(0.0, |b| b[o]);
                for (i, xv) in x.iter().enumerate() {
                    acc += w[o * x.len() + i] * xv;
                }
                acc
            })
            .collect()
    };

    let emb = w("model.embed_tokens.embedding_table");
    let mut x: Vec<Vec<f64>> = Vec::new();
    for (t, &tok) in tokens.iter().enumerate() {
        let mut row = emb[tok as usize * d..(tok as usize + 1) * d].to_vec();
        for i in 0..d / 2 {
            let freq = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
            row[2 * i] += (t as f64 * freq).sin();
            row[2 * i + 1] += (t as f64 * freq).cos();
        }
        x.push(row);
    }

    for layer in 0..2 {
        let p = |suffix: &str| format!("layers.{layer}.{suffix}");
        // attention sublayer
        let a1: Vec<Vec<f64>> = x
            .iter()
            .map(|row| layer_norm_ref(row, w(&p("input_layernorm.weight"))))
            .collect();
        let q: Vec<Vec<f64>> = a1
            .iter()
            .map(|r| matvec(w(&p("self_attn.q_proj.weight")), r, d, None))
            .collect();
        let kk: Vec<Vec<f64>> = a1
            .iter()
            .map(|r| matvec(w(&p("self_attn.k_proj.weight")), r, kv_heads * d_k, None))
            .collect();
        let vv: Vec<Vec<f64>> = a1
            .iter()
            .map(|r| matvec(w(&p("self_attn.v_proj.weight")), r, kv_heads * d_k, None))
            .collect();
        let mut ctx = vec![vec![0.0; d]; seq];
        for h in 0..heads {
            for t in 0..seq {
                let mut scores = Vec::new();
                for s in 0..=t {
                    let mut dot = 0.0;
                    for i in 0..d_k {
                        dot += q[t][h * d_k + i] * kk[s][i];
                    }
                    scores.push(dot / (d_k as f64).sqrt());
                }
                let probs = softmax_ref(&scores);
                for i in 0..d_k {
                    for (s, pr) in probs.iter().enumerate() {
                        ctx[t][h * d_k + i] += pr * vv[s][i];
                    }
                }
            }
        }
        let attn_out: Vec<Vec<f64>> = ctx
            .iter()
            .map(|r| matvec(w(&p("self_attn.o_proj.weight")), r, d, None))
            .collect();
        for t in 0..seq {
            for i in 0..d {
                x[t][i] += attn_out[t][i];
            }
        }
        // ffn sublayer
        let a2: Vec<Vec<f64>> = x
            .iter()
            .map(|row| layer_norm_ref(row, w(&p("post_attention_layernorm.weight"))))
            .collect();
        for t in 0..seq {
            let g = matvec(
                w(&p("mlp.gate_proj.weight")),
                &a2[t],
                inter,
                Some(w(&p("mlp.gate_proj.bias"))),
            );
            let u = matvec(
                w(&p("mlp.up_proj.weight")),
                &a2[t],
                inter,
                Some(w(&p("mlp.up_proj.bias"))),
            );
            let hidden: Vec<f64> = g.iter().zip(&u).map(|(gv, uv)| gelu_ref(*gv) * uv).collect();
            let down = matvec(
                w(&p("mlp.down_proj.weight")),
                &hidden,
                d,
                Some(w(&p("mlp.down_proj.bias"))),
            );
            for i in 0..d {
                x[t][i] += down[i];
            }
        }
    }

    let head_bias = w("lm_head.bias");
    for t in 0..seq {
        let h_norm = layer_norm_ref(&x[t], w("model.norm.weight"));
        for token in 0..vocab {
            let mut acc = head_bias[token];
            for i in 0..d {
                acc += h_norm[i] * emb[token * d + i];
            }
            let got = logits.at(0, t, token);
            assert!(
                (got - acc).abs() < 1e-10,
                "t {t}, token {token}: {got} vs {acc}"
            );
        }
    }
}

/// The standalone multi-head sublayer: classical path against an
/// independent recomputation, quantum-Q drop-in shape, and zero output
/// projection annihilating the result.
#[test]
fn multi_head_contracts() {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 7;
    cfg.hidden_size = 8;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.num_kv_heads = 1;
    cfg.intermediate_size = 12;
    cfg.max_seq_len = 8;
    cfg.projector = qproj::ProjectorConfig {
        n_qubits: 2,
        n_layers: 1,
        variant: qproj::AnsatzVariant::B150M,
        expand_mode: qproj::ExpandMode::Scalar,
    };

    // classical layer vs naive loops
    let model = Model::init(cfg.clone(), 0xfeed).unwrap();
    let layer = &model.layers[0];
    let mut rng = Prng::new(3);
    let x_data: Vec<f64> = (0..3 * 8).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let x = FeatureTensor::from_vec(1, 3, 8, x_data.clone()).unwrap();
    let out = tmodel::multi_head(&x, layer, &cfg).unwrap();

    let weight_of = |p: &Projection| match p {
        Projection::Dense(l) => l.w.clone(),
        _ => unreachable!(),
    };
    let (wq, wk, wv, wo) = (
        weight_of(&layer.q),
        weight_of(&layer.k),
        weight_of(&layer.v),
        weight_of(&layer.o),
    );
    let matvec = |w: &[f64], xr: &[f64], out_dim: usize| -> Vec<f64> {
        (0..out_dim)
            .map(|o| (0..xr.len()).map(|i| w[o * xr.len() + i] * xr[i]).sum())
            .collect()
    };
    let d_k = 4;
    for t in 0..3 {
        let mut ctx = vec![0.0; 8];
        for h in 0..2 {
            let q_t = matvec(&wq, &x_data[t * 8..(t + 1) * 8], 8);
            let mut scores = Vec::new();
            for s in 0..=t {
                let k_s = matvec(&wk, &x_data[s * 8..(s + 1) * 8], 4);
                let dot: f64 = (0..d_k).map(|i| q_t[h * d_k + i] * k_s[i]).sum();
                scores.push(dot / (d_k as f64).sqrt());
            }
            let probs = softmax_ref(&scores);
            for (s, p) in probs.iter().enumerate() {
                let v_s = matvec(&wv, &x_data[s * 8..(s + 1) * 8], 4);
                for i in 0..d_k {
                    ctx[h * d_k + i] += p * v_s[i];
                }
            }
        }
        let expected = matvec(&wo, &ctx, 8);
        for (i, e) in expected.iter().enumerate() {
            assert!((out.at(0, t, i) - e).abs() < 1e-12, "t {t} i {i}");
        }
    }

    // quantum Q keeps the drop-in shape
    let q_cfg = cfg.with_replacement(ReplacementStrategy::parse("[Wq]").unwrap());
    let q_model = Model::init(q_cfg.clone(), 0xfeed).unwrap();
    let q_out = tmodel::multi_head(&x, &q_model.layers[0], &q_cfg).unwrap();
    assert_eq!(q_out.shape(), (1, 3, 8));

    // zero output projection annihilates everything, replaced or not
    let mut zeroed = q_model.clone();
    if let Projection::Dense(l) = &mut zeroed.layers[0].o {
        l.w.iter_mut().for_each(|w| *w = 0.0);
    }
    let z_out = tmodel::multi_head(&x, &zeroed.layers[0], &q_cfg).unwrap();
    assert!(z_out.data().iter().all(|v| *v == 0.0));
}
