use qproj::ExpandMode;
use tmodel::{FfnForm, ModelConfig, ReplacementTarget};

/// Estimator output; see the crate docs for the exact methodology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopsReport {
    pub seq_len: usize,
    /// 2 × weight-matrix MACs per token (tied head included, quantum
    /// modules as dense equivalents).
    pub weight_flops_per_token: f64,
    /// Σ over layers of 4·L²·d_model.
    pub attention_flops: f64,
    /// L·weight_flops_per_token + attention_flops.
    pub total_flops: f64,
}

/// Dense-equivalent MACs of one hybrid module.
fn hybrid_macs(d_in: usize, d_out: usize, cfg: &ModelConfig) -> f64 {
    let n_q = cfg.projector.n_qubits;
    let reduce = d_in * 2 * n_q;
    let core = 2 * n_q * n_q;
    let expand = match cfg.projector.expand_mode {
        ExpandMode::Full => n_q * d_out,
        ExpandMode::Scalar => d_out,
    };
    (reduce + core + expand) as f64
}

fn proj_macs(replaced: bool, d_in: usize, d_out: usize, cfg: &ModelConfig) -> f64 {
    if replaced {
        hybrid_macs(d_in, d_out, cfg)
    } else {
        (d_in * d_out) as f64
    }
}

/// Weight-matrix MACs per token across the whole network.
fn weight_macs_per_token(cfg: &ModelConfig) -> f64 {
    let d = cfg.hidden_size;
    let kv_w = cfg.kv_width();
    let inter = cfg.intermediate_size;
    let rep = &cfg.replacement;

    let mut per_layer = 0.0;
    per_layer += proj_macs(rep.contains(ReplacementTarget::Wq), d, d, cfg);
    per_layer += proj_macs(rep.contains(ReplacementTarget::Wk), d, kv_w, cfg);
    per_layer += proj_macs(rep.contains(ReplacementTarget::Wv), d, kv_w, cfg);
    per_layer += proj_macs(rep.contains(ReplacementTarget::Wo), d, d, cfg);
    match cfg.ffn_form {
        FfnForm::Gated => {
            per_layer += proj_macs(rep.contains(ReplacementTarget::FfnGate), d, inter, cfg);
            per_layer += proj_macs(rep.contains(ReplacementTarget::FfnUp), d, inter, cfg);
            per_layer += proj_macs(rep.contains(ReplacementTarget::FfnDown), inter, d, cfg);
        }
        FfnForm::Plain => {
            per_layer += proj_macs(rep.contains(ReplacementTarget::FfnGate), d, inter, cfg);
            per_layer += proj_macs(rep.contains(ReplacementTarget::FfnDown), inter, d, cfg);
        }
    }

    let head = (cfg.vocab_size * d) as f64;
    cfg.num_layers as f64 * per_layer + head
}

pub fn estimate_flops(cfg: &ModelConfig, seq_len: usize) -> FlopsReport {
    let weight_flops_per_token = 2.0 * weight_macs_per_token(cfg);
    let attention_flops =
        cfg.num_layers as f64 * 4.0 * (seq_len as f64) * (seq_len as f64) * cfg.hidden_size as f64;
    FlopsReport {
        seq_len,
        weight_flops_per_token,
        attention_flops,
        total_flops: seq_len as f64 * weight_flops_per_token + attention_flops,
    }
}

/// Classical Computation (%): the strategy's weight compute as a share of
/// its classical baseline's. Attention is identical on both sides and
/// therefore excluded (see crate docs).
pub fn classical_computation_pct(cfg: &ModelConfig, seq_len: usize) -> f64 {
    let baseline = cfg.with_replacement(tmodel::ReplacementStrategy::none());
    let ours = estimate_flops(cfg, seq_len).weight_flops_per_token;
    let base = estimate_flops(&baseline, seq_len).weight_flops_per_token;
    100.0 * ours / base
}
