use std::collections::BTreeMap;

use tmodel::{visit_params_and_grads_mut, Model, ModelGrads};

use crate::step::TrainConfig;
use crate::{Result, TrainError};

/// One tensor's Adam update with bias correction:
/// m ← β₁m + (1−β₁)g;  v ← β₂v + (1−β₂)g²;
/// m̂ = m/(1−β₁ᵗ);  v̂ = v/(1−β₂ᵗ);  θ ← θ − η·m̂/(√v̂ + ε).
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Per-parameter first/second moments keyed by canonical tensor name, plus
/// the shared step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one optimizer step over every model tensor. Grads are
    /// checked for finiteness first; a non-finite gradient aborts with the
    /// offending tensor name before anything is mutated.
    pub fn step(
        &mut self,
        model: &mut Model,
        grads: &ModelGrads,
        lr: f64,
        cfg: &TrainConfig,
    ) -> Result<()> {
        let mut bad: Option<String> = None;
        grads.visit(&mut |name, g| {
            if bad.is_none() && g.iter().any(|v| !v.is_finite()) {
                bad = Some(name.to_string());
            }
        });
        if let Some(name) = bad {
            return Err(TrainError::NonFiniteGrad { name });
        }

        self.t += 1;
        let t = self.t;
        let moments = &mut self.moments;
        visit_params_and_grads_mut(model, grads, &mut |name, params, g| {
            let (m, v) = moments
                .entry(name.to_string())
                .or_insert_with(|| (vec![0.0; params.len()], vec![0.0; params.len()]));
            adam_step(params, g, m, v, t, lr, cfg.beta1, cfg.beta2, cfg.eps);
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = vec![1.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        let g = vec![0.37];
        adam_step(&mut p, &g, &mut m, &mut v, 1, 0.01, 0.9, 0.999, 1e-8);
        // after bias correction m̂ = g, v̂ = g², so the move is ≈ −lr·sign(g)
        assert!((p[0] - (1.0 - 0.01)).abs() < 1e-6);
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = vec![0.5, -0.25];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        for t in 1..=10 {
            adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, t, 0.1, 0.9, 0.999, 1e-8);
        }
        assert_eq!(p, vec![0.5, -0.25]);
    }

    /// Three steps of a scalar trace against the recurrence written out
    /// by hand, bit-tight.
    #[test]
    fn three_step_trace_matches_hand_recurrence() {
        let (beta1, beta2, eps, lr) = (0.9, 0.999, 1e-8, 0.05);
        let grads = [0.3, -0.7, 0.12];
        let mut p = vec![1.5];
        let mut m = vec![0.0];
        let mut v = vec![0.0];

        // hand-rolled oracle
        let (mut hp, mut hm, mut hv) = (1.5f64, 0.0f64, 0.0f64);
        for (i, &g) in grads.iter().enumerate() {
            let t = (i + 1) as i32;
            hm = beta1 * hm + (1.0 - beta1) * g;
            hv = beta2 * hv + (1.0 - beta2) * g * g;
            let mh = hm / (1.0 - beta1.powi(t));
            let vh = hv / (1.0 - beta2.powi(t));
            hp -= lr * mh / (vh.sqrt() + eps);
        }

        for (i, &g) in grads.iter().enumerate() {
            adam_step(&mut p, &[g], &mut m, &mut v, (i + 1) as u64, lr, beta1, beta2, eps);
        }
        assert!((p[0] - hp).abs() < 1e-12);
        assert!((m[0] - hm).abs() < 1e-12);
        assert!((v[0] - hv).abs() < 1e-12);
    }
}
