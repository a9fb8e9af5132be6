use crate::step::TrainConfig;

/// Cosine annealing: η_min + ½(η_max − η_min)(1 + cos(π·T_cur/T_max)).
pub fn cosine_annealed(t_cur: u64, t_max: u64, eta_min: f64, eta_max: f64) -> f64 {
    let phase = std::f64::consts::PI * t_cur as f64 / t_max as f64;
    eta_min + 0.5 * (eta_max - eta_min) * (1.0 + phase.cos())
}

/// Learning rate at 1-based step `t`: linear warmup to η_max over the
/// first T_warmup steps, then cosine annealing with warm restarts every
/// T_max steps.
pub fn lr_at_step(t: u64, cfg: &TrainConfig) -> f64 {
    if cfg.warmup_steps > 0 && t <= cfg.warmup_steps {
        return cfg.eta_max * t as f64 / cfg.warmup_steps as f64;
    }
    let t_cur = (t - cfg.warmup_steps) % cfg.cycle_steps;
    cosine_annealed(t_cur, cfg.cycle_steps, cfg.eta_min, cfg.eta_max)
}
