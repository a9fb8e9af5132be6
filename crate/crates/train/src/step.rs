use qsim::rng::Prng;
use tmodel::Model;

use crate::adam::AdamState;
use crate::loss::{cross_entropy, cross_entropy_with_grad};
use crate::schedule::lr_at_step;
use crate::{Result, TrainError};

/// How gradients for the quantum variational parameters Θ are assembled:
/// the exact adjoint through the simulator (fast path), or central finite
/// differences against the full loss (hardware-fidelity mode; 2·|Θ| extra
/// forward passes per step).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradMode {
    #[default]
    Adjoint,
    Fd,
}

impl GradMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjoint" => Some(Self::Adjoint),
            "fd" => Some(Self::Fd),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Adjoint => "adjoint",
            Self::Fd => "fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub seq_len: usize,
    pub total_steps: u64,
    pub warmup_steps: u64,
    /// T_max of the cosine cycle.
    pub cycle_steps: u64,
    pub eta_max: f64,
    pub eta_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub fd_delta: f64,
    pub seed: u64,
    pub dropout: f64,
    pub grad_mode: GradMode,
    /// Global-norm clip threshold; None disables clipping.
    pub clip_norm: Option<f64>,
    /// Target id excluded from the loss (PAD).
    pub ignore_index: Option<u32>,
}

impl TrainConfig {
    /// Desk-scale defaults: η_max 3e-4, η_min 3e-5, warmup 5% of steps.
    pub fn defaults(batch_size: usize, seq_len: usize, total_steps: u64, seed: u64) -> Self {
        let warmup = (total_steps / 20).max(1);
        Self {
            batch_size,
            seq_len,
            total_steps,
            warmup_steps: warmup,
            cycle_steps: (total_steps - warmup).max(1),
            eta_max: 3e-4,
            eta_min: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            fd_delta: 1e-4,
            seed,
            dropout: 0.0,
            grad_mode: GradMode::Adjoint,
            clip_norm: None,
            ignore_index: Some(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_min > 0.0 && self.eta_min <= self.eta_max) {
            return Err(TrainError::InvalidConfig(format!(
                "need 0 < eta_min <= eta_max, got {} and {}",
                self.eta_min, self.eta_max
            )));
        }
        if self.warmup_steps >= self.total_steps {
            return Err(TrainError::InvalidConfig(format!(
                "warmup_steps {} must be below total_steps {}",
                self.warmup_steps, self.total_steps
            )));
        }
        if !(1e-4..=1e-3).contains(&self.fd_delta) {
            return Err(TrainError::InvalidConfig(format!(
                "fd_delta {} outside [1e-4, 1e-3]",
                self.fd_delta
            )));
        }
        if self.cycle_steps == 0 || self.batch_size == 0 || self.seq_len == 0 {
            return Err(TrainError::InvalidConfig(
                "cycle_steps, batch_size and seq_len must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One training batch: inputs and their next-token targets, both [B, L]
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub batch: usize,
    pub seq: usize,
    pub tokens: Vec<u32>,
    pub targets: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub lr: f64,
    /// Extra full forward passes spent on FD quantum gradients
    /// (exactly 2·|Θ| in FD mode, 0 in adjoint mode).
    pub quantum_evals: usize,
    pub tokens: usize,
}

/// One optimization step: forward, loss, gradient assembly, Adam update.
/// `step_index` is 1-based and drives both the schedule and the dropout
/// mask stream, so a resumed run replays the identical step sequence.
pub fn train_step(
    model: &mut Model,
    batch: &Batch,
    opt: &mut AdamState,
    cfg: &TrainConfig,
    step_index: u64,
) -> Result<StepStats> {
    let dropout_seed = cfg.seed ^ step_index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut dropout_rng = Prng::new(dropout_seed);
    let (logits, cache) = model.forward_cached(
        &batch.tokens,
        batch.batch,
        batch.seq,
        true,
        &mut dropout_rng,
    )?;
    let (loss, dlogits) = cross_entropy_with_grad(&logits, &batch.targets, cfg.ignore_index)?;
    if !loss.is_finite() {
        return Err(TrainError::NonFiniteLoss { step: step_index });
    }

    let mut grads = model.backward(&cache, &dlogits)?;

    let mut quantum_evals = 0;
    if cfg.grad_mode == GradMode::Fd {
        quantum_evals = overwrite_quantum_grads_with_fd(
            model,
            &mut grads,
            batch,
            cfg,
            dropout_seed,
            step_index,
        )?;
    }

    if let Some(max_norm) = cfg.clip_norm {
        clip_global_norm(&mut grads, max_norm);
    }

    let lr = lr_at_step(step_index, cfg);
    opt.step(model, &grads, lr, cfg)?;

    Ok(StepStats {
        loss,
        lr,
        quantum_evals,
        tokens: batch.batch * batch.seq,
    })
}

/// Central finite differences of the full loss for every quantum
/// variational tensor (Θ lives in tensors named `...mq_layers.0.weight`).
/// Returns the number of extra forward passes (2 per component).
fn overwrite_quantum_grads_with_fd(
    model: &mut Model,
    grads: &mut tmodel::ModelGrads,
    batch: &Batch,
    cfg: &TrainConfig,
    dropout_seed: u64,
    step_index: u64,
) -> Result<usize> {
    let theta_names: Vec<(String, usize)> = {
        let mut names = Vec::new();
        model.visit_params(&mut |name, values| {
            if name.ends_with("mq_layers.0.weight") {
                names.push((name.to_string(), values.len()));
            }
        });
        names
    };

    // loss under the same dropout masks as the main pass
    let eval_loss = |model: &mut Model| -> Result<f64> {
        let mut rng = Prng::new(dropout_seed);
        let (logits, _) =
            model.forward_cached(&batch.tokens, batch.batch, batch.seq, true, &mut rng)?;
        cross_entropy(&logits, &batch.targets, cfg.ignore_index)
    };

    let mut evals = 0;
    let mut fd_by_name: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, len) in &theta_names {
        let mut fd = vec![0.0; *len];
        for idx in 0..*len {
            let mut original = 0.0;
            model.visit_params_mut(&mut |n, p| {
                if n == name {
                    original = p[idx];
                    p[idx] = original + cfg.fd_delta;
                }
            });
            let plus = eval_loss(model)?;
            model.visit_params_mut(&mut |n, p| {
                if n == name {
                    p[idx] = original - cfg.fd_delta;
                }
            });
            let minus = eval_loss(model)?;
            model.visit_params_mut(&mut |n, p| {
                if n == name {
                    p[idx] = original;
                }
            });
            evals += 2;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(TrainError::NonFiniteLoss { step: step_index });
            }
            fd[idx] = (plus - minus) / (2.0 * cfg.fd_delta);
        }
        fd_by_name.push((name.clone(), fd));
    }

    // splice the FD values into the gradient tree by name
    for (name, fd) in fd_by_name {
        let mut replaced = false;
        replace_grad_tensor(grads, &name, &fd, &mut replaced);
        debug_assert!(replaced, "no gradient slot named {name}");
    }
    Ok(evals)
}

fn replace_grad_tensor(grads: &mut tmodel::ModelGrads, name: &str, fd: &[f64], replaced: &mut bool) {
    // ModelGrads has no mutable named visitor; walk the same structure the
    // immutable visitor walks and swap the matching theta vector.
    for (i, layer) in grads.layers.iter_mut().enumerate() {
        let prefix = format!("layers.{i}");
        let mut try_slot = |slot: &mut tmodel::ProjectionGrads, slot_name: String| {
            match slot {
                tmodel::ProjectionGrads::Quantum(g) => {
                    if format!("{slot_name}.mq_layers.0.weight") == name {
                        g.theta.copy_from_slice(fd);
                        *replaced = true;
                    }
                }
                tmodel::ProjectionGrads::PerHead(heads) => {
                    for (h, g) in heads.iter_mut().enumerate() {
                        if format!("{slot_name}.head{h}.mq_layers.0.weight") == name {
                            g.theta.copy_from_slice(fd);
                            *replaced = true;
                        }
                    }
                }
                tmodel::ProjectionGrads::Dense(_) => {}
            }
        };
        try_slot(&mut layer.q, format!("{prefix}.self_attn.q_proj"));
        try_slot(&mut layer.k, format!("{prefix}.self_attn.k_proj"));
        try_slot(&mut layer.v, format!("{prefix}.self_attn.v_proj"));
        try_slot(&mut layer.o, format!("{prefix}.self_attn.o_proj"));
        match &mut layer.ffn {
            tmodel::FfnGrads::Gated { gate, up, down } => {
                try_slot(gate, format!("{prefix}.mlp.gate_proj"));
                try_slot(down, format!("{prefix}.mlp.down_proj"));
                try_slot(up, format!("{prefix}.mlp.up_proj"));
            }
            tmodel::FfnGrads::Plain { w1, w2 } => {
                try_slot(w1, format!("{prefix}.mlp.fc1"));
                try_slot(w2, format!("{prefix}.mlp.fc2"));
            }
        }
    }
}

fn clip_global_norm(grads: &mut tmodel::ModelGrads, max_norm: f64) {
    let mut sq = 0.0;
    grads.visit(&mut |_, g| {
        for v in g {
            sq += v * v;
        }
    });
    let norm = sq.sqrt();
    if norm <= max_norm || norm == 0.0 {
        return;
    }
    let scale = max_norm / norm;
    let scale_vec = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x *= scale);
    let scale_proj = |p: &mut tmodel::ProjectionGrads| match p {
        tmodel::ProjectionGrads::Dense(g) => {
            scale_vec(&mut g.w);
            if let Some(b) = &mut g.b {
                scale_vec(b);
            }
        }
        tmodel::ProjectionGrads::Quantum(g) => {
            scale_vec(&mut g.w_down);
            scale_vec(&mut g.b_down);
            scale_vec(&mut g.theta);
            scale_vec(&mut g.w_up);
            scale_vec(&mut g.b_up);
        }
        tmodel::ProjectionGrads::PerHead(heads) => {
            for g in heads {
                scale_vec(&mut g.w_down);
                scale_vec(&mut g.b_down);
                scale_vec(&mut g.theta);
                scale_vec(&mut g.w_up);
                scale_vec(&mut g.b_up);
            }
        }
    };
    scale_vec(&mut grads.embedding);
    for layer in &mut grads.layers {
        scale_vec(&mut layer.input_norm);
        scale_proj(&mut layer.q);
        scale_proj(&mut layer.k);
        scale_proj(&mut layer.v);
        scale_proj(&mut layer.o);
        scale_vec(&mut layer.post_attention_norm);
        match &mut layer.ffn {
            tmodel::FfnGrads::Gated { gate, up, down } => {
                scale_proj(gate);
                scale_proj(up);
                scale_proj(down);
            }
            tmodel::FfnGrads::Plain { w1, w2 } => {
                scale_proj(w1);
                scale_proj(w2);
            }
        }
    }
}
