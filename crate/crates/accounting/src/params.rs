use qproj::{AnsatzDescriptor, ExpandMode, ProjectorConfig};
use tmodel::{FfnForm, ModelConfig, ReplacementTarget};

use crate::report::{ParamReport, ReportEntry};

/// Trainable quantum parameter count for one projector instance.
fn theta_count(p: &ProjectorConfig) -> usize {
    AnsatzDescriptor::new(p.variant, p.n_qubits, p.n_layers)
        .expect("valid projector config")
        .trainable_param_count()
}

/// Rows of one hybrid module under `prefix`, mirroring the breakdown-table
/// naming: reduce_proj, mq_layers.0, dense_expand.
fn hybrid_entries(
    prefix: &str,
    d_in: usize,
    d_out: usize,
    p: &ProjectorConfig,
    out: &mut Vec<ReportEntry>,
) {
    let n_q = p.n_qubits;
    out.push(ReportEntry::new(
        format!("{prefix}.reduce_proj.weight"),
        vec![2 * n_q, d_in],
    ));
    out.push(ReportEntry::new(
        format!("{prefix}.reduce_proj.bias"),
        vec![2 * n_q],
    ));
    out.push(ReportEntry::new(
        format!("{prefix}.mq_layers.0.weight"),
        vec![theta_count(p)],
    ));
    let expand_shape = match p.expand_mode {
        ExpandMode::Scalar => vec![d_out, 1],
        ExpandMode::Full => vec![d_out, n_q],
    };
    out.push(ReportEntry::new(
        format!("{prefix}.dense_expand.weight"),
        expand_shape,
    ));
    out.push(ReportEntry::new(
        format!("{prefix}.dense_expand.bias"),
        vec![d_out],
    ));
}

/// Attention projection rows: a bias-free dense matrix, or the hybrid
/// module (per-head when the config says so).
fn attention_proj_entries(
    cfg: &ModelConfig,
    prefix: &str,
    d_in: usize,
    d_out: usize,
    replaced: bool,
    per_head_count: Option<usize>,
    out: &mut Vec<ReportEntry>,
) {
    if !replaced {
        out.push(ReportEntry::new(
            format!("{prefix}.weight"),
            vec![d_out, d_in],
        ));
        return;
    }
    match per_head_count.filter(|_| cfg.per_head_projectors) {
        Some(heads) => {
            for h in 0..heads {
                hybrid_entries(
                    &format!("{prefix}.head{h}"),
                    d_in,
                    d_out / heads,
                    &cfg.projector,
                    out,
                );
            }
        }
        None => hybrid_entries(prefix, d_in, d_out, &cfg.projector, out),
    }
}

/// Biased dense FFN projection rows, or the hybrid module.
fn ffn_proj_entries(
    cfg: &ModelConfig,
    prefix: &str,
    d_in: usize,
    d_out: usize,
    replaced: bool,
    out: &mut Vec<ReportEntry>,
) {
    if replaced {
        hybrid_entries(prefix, d_in, d_out, &cfg.projector, out);
    } else {
        out.push(ReportEntry::new(
            format!("{prefix}.weight"),
            vec![d_out, d_in],
        ));
        out.push(ReportEntry::new(format!("{prefix}.bias"), vec![d_out]));
    }
}

/// Entry-by-entry parameter counts from shape rules: tied embedding, k/v at
/// num_kv_heads·d_k, weight-only norms, bias-free attention projections,
/// biased FFN projections, quantum modules as reduce + θ + expand + bias,
/// and a bias-only output head.
pub fn count_params(cfg: &ModelConfig) -> ParamReport {
    let d = cfg.hidden_size;
    let kv_w = cfg.kv_width();
    let inter = cfg.intermediate_size;
    let rep = &cfg.replacement;

    let mut entries = Vec::new();
    entries.push(ReportEntry::new(
        "model.embed_tokens.embedding_table",
        vec![cfg.vocab_size, d],
    ));

    for i in 0..cfg.num_layers {
        let p = |s: &str| format!("layers.{i}.{s}");
        entries.push(ReportEntry::new(p("input_layernorm.weight"), vec![d]));
        attention_proj_entries(
            cfg,
            &p("self_attn.q_proj"),
            d,
            d,
            rep.contains(ReplacementTarget::Wq),
            Some(cfg.num_heads),
            &mut entries,
        );
        attention_proj_entries(
            cfg,
            &p("self_attn.k_proj"),
            d,
            kv_w,
            rep.contains(ReplacementTarget::Wk),
            Some(cfg.num_kv_heads),
            &mut entries,
        );
        attention_proj_entries(
            cfg,
            &p("self_attn.v_proj"),
            d,
            kv_w,
            rep.contains(ReplacementTarget::Wv),
            Some(cfg.num_kv_heads),
            &mut entries,
        );
        attention_proj_entries(
            cfg,
            &p("self_attn.o_proj"),
            d,
            d,
            rep.contains(ReplacementTarget::Wo),
            None,
            &mut entries,
        );
        entries.push(ReportEntry::new(
            p("post_attention_layernorm.weight"),
            vec![d],
        ));
        match cfg.ffn_form {
            FfnForm::Gated => {
                ffn_proj_entries(
                    cfg,
                    &p("mlp.gate_proj"),
                    d,
                    inter,
                    rep.contains(ReplacementTarget::FfnGate),
                    &mut entries,
                );
                ffn_proj_entries(
                    cfg,
                    &p("mlp.down_proj"),
                    inter,
                    d,
                    rep.contains(ReplacementTarget::FfnDown),
                    &mut entries,
                );
                ffn_proj_entries(
                    cfg,
                    &p("mlp.up_proj"),
                    d,
                    inter,
                    rep.contains(ReplacementTarget::FfnUp),
                    &mut entries,
                );
            }
            FfnForm::Plain => {
                ffn_proj_entries(
                    cfg,
                    &p("mlp.fc1"),
                    d,
                    inter,
                    rep.contains(ReplacementTarget::FfnGate),
                    &mut entries,
                );
                ffn_proj_entries(
                    cfg,
                    &p("mlp.fc2"),
                    inter,
                    d,
                    rep.contains(ReplacementTarget::FfnDown),
                    &mut entries,
                );
            }
        }
    }

    entries.push(ReportEntry::new("model.norm.weight", vec![d]));
    entries.push(ReportEntry::new("lm_head.bias", vec![cfg.vocab_size]));

    let total = entries.iter().map(|e| e.count).sum();
    ParamReport {
        entries,
        num_layers: cfg.num_layers,
        total,
    }
}

/// (ansatz gate count, trainable quantum parameter count) for one
/// projector instance.
pub fn gate_and_param_census(p: &ProjectorConfig) -> (usize, usize) {
    let descriptor = AnsatzDescriptor::new(p.variant, p.n_qubits, p.n_layers)
        .expect("valid projector config");
    (descriptor.gate_count(), descriptor.trainable_param_count())
}

/// Percentage of classical parameters removed by a strategy relative to
/// the classical baseline of the same architecture.
pub fn parameter_reduction_pct(cfg: &ModelConfig) -> f64 {
    let baseline = count_params(&cfg.with_replacement(tmodel::ReplacementStrategy::none()));
    let hybrid = count_params(cfg);
    100.0 * (baseline.total - hybrid.total) as f64 / baseline.total as f64
}
