//! Whole-model analytic gradients against central finite differences, for
//! classical and hybrid configurations, using a fixed random linear
//! functional of the logits as the scalar loss.

use std::collections::HashMap;

use qproj::FeatureTensor;
use qsim::rng::Prng;
use tmodel::{visit_params_and_grads_mut, Model, ModelConfig, ReplacementStrategy};

fn toy_config_with(strategy: &str, per_head: bool) -> ModelConfig {
    let mut cfg = toy_config(strategy);
    cfg.per_head_projectors = per_head;
    cfg
}

fn toy_config(strategy: &str) -> ModelConfig {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 11;
    cfg.hidden_size = 16;
    cfg.num_layers = 1;
    cfg.num_heads = 4;
    cfg.num_kv_heads = 2;
    cfg.intermediate_size = 12;
    cfg.max_seq_len = 8;
    cfg.replacement = ReplacementStrategy::parse(strategy).unwrap();
    cfg.projector = qproj::ProjectorConfig {
        n_qubits: 3,
        n_layers: 1,
        variant: qproj::AnsatzVariant::B150M,
        expand_mode: qproj::ExpandMode::Scalar,
    };
    cfg
}

fn loss_of(model: &Model, tokens: &[u32], seq: usize, weights: &[f64]) -> f64 {
    let logits = model.forward(tokens, 1, seq).unwrap();
    logits.data().iter().zip(weights).map(|(l, w)| l * w).sum()
}

fn grad_close(analytic: f64, fd: f64) -> bool {
    let diff = (analytic - fd).abs();
    diff <= 1e-7 || diff / analytic.abs().max(fd.abs()) <= 1e-4
}

#[test]
fn model_gradients_match_fd_for_hybrid_configs() {
    for (strategy, per_head) in [
        ("[]", false),
        ("[Wq]", false),
        ("[Wq]", true),
        ("[FFN_gate]", false),
        ("[Wq, Wk, Wv, Wo]", false),
    ] {
        let mut model = Model::init(toy_config_with(strategy, per_head), 0x6ead).unwrap();
        let tokens = [1u32, 7, 3, 9];
        let seq = tokens.len();
        let mut rng = Prng::new(0x10ad);
        let weights: Vec<f64> = (0..seq * 11).map(|_| rng.uniform(-1.0, 1.0)).collect();

        let mut drop_rng = Prng::new(0);
        let (logits, cache) = model
            .forward_cached(&tokens, 1, seq, false, &mut drop_rng)
            .unwrap();
        let dlogits = FeatureTensor::from_vec(1, seq, 11, weights.clone()).unwrap();
        let grads = model.backward(&cache, &dlogits).unwrap();
        let _ = logits;

        // collect analytic grads by name
        let mut analytic: HashMap<String, Vec<f64>> = HashMap::new();
        visit_params_and_grads_mut(&mut model, &grads, &mut |name, _p, g| {
            analytic.insert(name.to_string(), g.to_vec());
        });

        // FD spot checks: probe a deterministic subset of indices of every
        // tensor (full FD over the embedding alone would be 2·176 forwards
        // per tensor; the subset still touches every tensor kind).
        let names: Vec<(String, usize)> = {
            let mut v = Vec::new();
            model.visit_params(&mut |name, vals| v.push((name.to_string(), vals.len())));
            v
        };
        let delta = 1e-5;
        for (name, len) in &names {
            let probes: Vec<usize> = if *len <= 6 {
                (0..*len).collect()
            } else {
                vec![0, len / 3, len / 2, len - 1]
            };
            for &idx in &probes {
                let perturb = |model: &mut Model, amount: f64| {
                    model.visit_params_mut(&mut |n, p| {
                        if n == name {
                            p[idx] += amount;
                        }
                    });
                };
                let mut plus = model.clone();
                perturb(&mut plus, delta);
                let l_plus = loss_of(&plus, &tokens, seq, &weights);
                let mut minus = model.clone();
                perturb(&mut minus, -delta);
                let l_minus = loss_of(&minus, &tokens, seq, &weights);
                let fd = (l_plus - l_minus) / (2.0 * delta);
                let a = analytic[name][idx];
                assert!(
                    grad_close(a, fd),
                    "strategy {strategy} (per_head {per_head}), {name}[{idx}]: analytic {a} vs fd {fd}"
                );
            }
        }
    }
}
