//! Parameter accounting and FLOPs estimation, computed from configuration
//! shape rules alone (never from a live model, so the "counts equal the
//! live parameter total" check stays a genuine two-route comparison).
//!
//! FLOPs estimator, documented:
//!   * weight compute per token = 2 FLOPs per multiply-accumulate over
//!     every weight matrix, including the tied output head (embedding
//!     lookups are free); a quantum module is costed as its classical
//!     dense equivalent: reduce (d_in·2n_q) + a 2n_q→n_q dense core +
//!     the expansion matrix (d_out·n_q full / d_out scalar);
//!   * attention score/value products add 4·L²·d_model FLOPs per layer
//!     (quadratic in sequence length);
//!   * total(L) = L · weight-FLOPs-per-token + layers · 4·L²·d_model.
//!
//! The Classical Computation (%) column compares the *weight* compute of a
//! strategy against its classical baseline. The attention term is
//! strategy-invariant (no replacement touches it), so it is excluded from
//! the ratio; including it would only pull every percentage toward 100.

mod flops;
mod params;
mod report;

pub use flops::{classical_computation_pct, estimate_flops, FlopsReport};
pub use params::{count_params, gate_and_param_census, parameter_reduction_pct};
pub use report::{group_thousands, render_appendix_table, render_csv, ParamReport, ReportEntry};

use tmodel::{ReplacementStrategy, ReplacementTarget};

/// Golden parameter table for the hybrid 8M configuration, as shipped.
pub const HYQUT8M_GOLDEN: &str = include_str!("../fixtures/hyqut8m_params.txt");

/// The seven ablation strategies in table order.
pub fn table2_strategies() -> Vec<(&'static str, ReplacementStrategy)> {
    vec![
        ("None (Classical Baseline)", ReplacementStrategy::none()),
        ("Attention: Wq", ReplacementStrategy::of(&[ReplacementTarget::Wq])),
        (
            "Attention: Wq, Wk, Wv",
            ReplacementStrategy::of(&[
                ReplacementTarget::Wq,
                ReplacementTarget::Wk,
                ReplacementTarget::Wv,
            ]),
        ),
        (
            "Attention: Wq, Wk, Wv, Wo",
            ReplacementStrategy::of(&[
                ReplacementTarget::Wq,
                ReplacementTarget::Wk,
                ReplacementTarget::Wv,
                ReplacementTarget::Wo,
            ]),
        ),
        (
            "FFN: W_gate",
            ReplacementStrategy::of(&[ReplacementTarget::FfnGate]),
        ),
        (
            "FFN: W_gate, W_up, W_down",
            ReplacementStrategy::of(&[
                ReplacementTarget::FfnGate,
                ReplacementTarget::FfnUp,
                ReplacementTarget::FfnDown,
            ]),
        ),
        ("All Linear Layers", ReplacementStrategy::all()),
    ]
}
