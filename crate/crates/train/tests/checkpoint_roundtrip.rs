//! Checkpoint container: bit-exact round trips, resume continuity, and
//! rejection paths (magic, corruption, config mismatch).

use qsim::rng::Prng;
use tmodel::{Model, ModelConfig, ReplacementStrategy};
use train::{
    diff_config_texts, load_checkpoint, restore, save_checkpoint, train_step, AdamState, Batch,
    GradMode, TrainConfig, TrainError,
};

const CONFIG_TEXT: &str = "[model]\nhidden_size = 16\nnum_hidden_layers = 1\n";

fn toy_model() -> Model {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 10;
    cfg.hidden_size = 16;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.num_kv_heads = 1;
    cfg.intermediate_size = 12;
    cfg.max_seq_len = 16;
    cfg.replacement = ReplacementStrategy::parse("[FFN_gate]").unwrap();
    cfg.projector = qproj::ProjectorConfig {
        n_qubits: 2,
        n_layers: 1,
        variant: qproj::AnsatzVariant::A8M,
        expand_mode: qproj::ExpandMode::Scalar,
    };
    Model::init(cfg, 42).unwrap()
}

fn toy_batch(step: u64) -> Batch {
    let motif = [1u32, 3, 2, 5, 4, 3];
    let (batch, seq) = (2usize, 8usize);
    let mut tokens = Vec::new();
    let mut targets = Vec::new();
    for b in 0..batch {
        let offset = (step as usize + b) % motif.len();
        for t in 0..seq {
            tokens.push(motif[(offset + t) % motif.len()]);
            targets.push(motif[(offset + t + 1) % motif.len()]);
        }
    }
    Batch {
        batch,
        seq,
        tokens,
        targets,
    }
}

fn train_cfg() -> TrainConfig {
    let mut cfg = TrainConfig::defaults(2, 8, 40, 17);
    cfg.eta_max = 1e-3;
    cfg.eta_min = 1e-4;
    cfg.grad_mode = GradMode::Adjoint;
    cfg
}

#[test]
fn save_load_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");

    let mut model = toy_model();
    let mut opt = AdamState::new();
    let cfg = train_cfg();
    for step in 1..=5 {
        train_step(&mut model, &toy_batch(step), &mut opt, &cfg, step).unwrap();
    }

    save_checkpoint(&model, &opt, 5, CONFIG_TEXT, &path).unwrap();
    let data = load_checkpoint(&path).unwrap();
    assert_eq!(data.step, 5);
    assert_eq!(data.config_text, CONFIG_TEXT);

    let mut restored = toy_model(); // same config, different weights after init? same seed → same; perturb first
    restored.visit_params_mut(&mut |_, p| p.iter_mut().for_each(|v| *v = 0.123));
    let mut restored_opt = AdamState::new();
    restore(&mut restored, &mut restored_opt, &data, Some(CONFIG_TEXT)).unwrap();

    let collect = |m: &Model| {
        let mut v = Vec::new();
        m.visit_params(&mut |_, p| v.extend_from_slice(p));
        v
    };
    assert_eq!(collect(&model), collect(&restored), "tensors bit-equal");
    assert_eq!(opt, restored_opt, "optimizer moments bit-equal");
}

/// Resumed training reproduces the uninterrupted run's losses exactly.
#[test]
fn resume_continues_identical_trace() {
    let cfg = train_cfg();

    // uninterrupted run of 12 steps
    let mut model_a = toy_model();
    let mut opt_a = AdamState::new();
    let mut trace_a = Vec::new();
    for step in 1..=12 {
        let stats = train_step(&mut model_a, &toy_batch(step), &mut opt_a, &cfg, step).unwrap();
        trace_a.push(stats.loss);
    }

    // interrupted at step 7, checkpointed, resumed
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resume.ckpt");
    let mut model_b = toy_model();
    let mut opt_b = AdamState::new();
    let mut trace_b = Vec::new();
    for step in 1..=7 {
        let stats = train_step(&mut model_b, &toy_batch(step), &mut opt_b, &cfg, step).unwrap();
        trace_b.push(stats.loss);
    }
    save_checkpoint(&model_b, &opt_b, 7, CONFIG_TEXT, &path).unwrap();

    let data = load_checkpoint(&path).unwrap();
    let mut model_c = toy_model();
    model_c.visit_params_mut(&mut |_, p| p.iter_mut().for_each(|v| *v = 9.9));
    let mut opt_c = AdamState::new();
    restore(&mut model_c, &mut opt_c, &data, Some(CONFIG_TEXT)).unwrap();
    for step in data.step + 1..=12 {
        let stats = train_step(&mut model_c, &toy_batch(step), &mut opt_c, &cfg, step).unwrap();
        trace_b.push(stats.loss);
    }

    assert_eq!(trace_a, trace_b, "resumed trace must equal uninterrupted trace");
}

#[test]
fn config_mismatch_is_rejected_with_field_diff() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.ckpt");
    let model = toy_model();
    save_checkpoint(&model, &AdamState::new(), 0, CONFIG_TEXT, &path).unwrap();

    let data = load_checkpoint(&path).unwrap();
    let other = "[model]\nhidden_size = 32\nnum_hidden_layers = 1\n";
    let mut m = toy_model();
    let err = restore(&mut m, &mut AdamState::new(), &data, Some(other)).unwrap_err();
    match err {
        TrainError::ConfigMismatch { diffs } => {
            assert_eq!(diffs.len(), 1);
            assert!(diffs[0].contains("model.hidden_size"));
            assert!(diffs[0].contains("32"));
            assert!(diffs[0].contains("16"));
        }
        other => panic!("expected ConfigMismatch, got {other:?}"),
    }
}

#[test]
fn corruption_and_magic_are_detected() {
    let dir = tempfile::tempdir().unwrap();

    let not_ckpt = dir.path().join("junk.bin");
    std::fs::write(&not_ckpt, b"definitely not a checkpoint").unwrap();
    assert!(matches!(load_checkpoint(&not_ckpt), Err(TrainError::BadMagic)));

    let path = dir.path().join("trunc.ckpt");
    save_checkpoint(&toy_model(), &AdamState::new(), 1, CONFIG_TEXT, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(TrainError::Corrupt(_))));
}

#[test]
fn config_diff_reports_absent_keys() {
    let diffs = diff_config_texts("[a]\nx = 1\n", "[a]\nx = 1\ny = 2\n");
    assert_eq!(diffs.len(), 1);
    assert!(diffs[0].contains("a.y"));
    assert!(diffs[0].contains("<absent>"));
}

#[test]
fn dropout_training_resumes_exactly_too() {
    // nonzero dropout exercises the per-step mask seeding
    let mut cfg = train_cfg();
    cfg.dropout = 0.2;
    let mut model_cfg = toy_model().config.clone();
    model_cfg.dropout = 0.2;

    let run = |upto: u64, from: Option<(&Model, &AdamState, u64)>| -> (Model, AdamState, Vec<f64>) {
        let (mut model, mut opt, start) = match from {
            Some((m, o, s)) => (m.clone(), o.clone(), s),
            None => (Model::init(model_cfg.clone(), 42).unwrap(), AdamState::new(), 0),
        };
        let mut trace = Vec::new();
        for step in start + 1..=upto {
            let stats = train_step(&mut model, &toy_batch(step), &mut opt, &cfg, step).unwrap();
            trace.push(stats.loss);
        }
        (model, opt, trace)
    };

    let (_, _, full) = run(10, None);
    let (m_half, o_half, mut head) = run(6, None);
    let (_, _, tail) = run(10, Some((&m_half, &o_half, 6)));
    head.extend(tail);
    assert_eq!(full, head);
    let _ = Prng::new(0);
}
