use std::collections::BTreeSet;
use std::fmt;

use qproj::ProjectorConfig;

use crate::{ModelError, Result};

/// Which projection matrices the quantum module replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReplacementTarget {
    Wq,
    Wk,
    Wv,
    Wo,
    FfnGate,
    FfnUp,
    FfnDown,
}

impl ReplacementTarget {
    pub const ALL: [ReplacementTarget; 7] = [
        ReplacementTarget::Wq,
        ReplacementTarget::Wk,
        ReplacementTarget::Wv,
        ReplacementTarget::Wo,
        ReplacementTarget::FfnGate,
        ReplacementTarget::FfnUp,
        ReplacementTarget::FfnDown,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wq" => Some(Self::Wq),
            "wk" => Some(Self::Wk),
            "wv" => Some(Self::Wv),
            "wo" => Some(Self::Wo),
            "ffn_gate" | "w_gate" | "gate" => Some(Self::FfnGate),
            "ffn_up" | "w_up" | "up" => Some(Self::FfnUp),
            "ffn_down" | "w_down" | "down" => Some(Self::FfnDown),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Wq => "Wq",
            Self::Wk => "Wk",
            Self::Wv => "Wv",
            Self::Wo => "Wo",
            Self::FfnGate => "FFN_gate",
            Self::FfnUp => "FFN_up",
            Self::FfnDown => "FFN_down",
        }
    }
}

/// Subset of projections to replace; the empty set is the classical
/// baseline. Iteration order is fixed (BTreeSet) for determinism.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ReplacementStrategy(BTreeSet<ReplacementTarget>);

impl ReplacementStrategy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn of(targets: &[ReplacementTarget]) -> Self {
        Self(targets.iter().copied().collect())
    }

    pub fn all() -> Self {
        Self::of(&ReplacementTarget::ALL)
    }

    pub fn insert(&mut self, t: ReplacementTarget) {
        self.0.insert(t);
    }

    pub fn contains(&self, t: ReplacementTarget) -> bool {
        self.0.contains(&t)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ReplacementTarget> + '_ {
        self.0.iter().copied()
    }

    /// Parses a comma-separated list, with or without surrounding brackets.
    pub fn parse(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let mut strategy = Self::none();
        for part in inner.split(',') {
            let part = part.trim().trim_matches('"');
            if part.is_empty() {
                continue;
            }
            let target = ReplacementTarget::parse(part).ok_or_else(|| {
                ModelError::InvalidConfig(format!("unknown replacement target `{part}`"))
            })?;
            strategy.insert(target);
        }
        Ok(strategy)
    }
}

impl fmt::Display for ReplacementStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|t| t.name()).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// Feed-forward body: the gated form matches the accounting tables; the
/// plain two-layer GELU form is kept as a config option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FfnForm {
    #[default]
    Gated,
    Plain,
}

/// Transformer hyperparameters plus the replacement strategy and the
/// projector template.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub num_kv_heads: usize,
    pub intermediate_size: usize,
    pub max_seq_len: usize,
    pub layer_norm_eps: f64,
    pub dropout: f64,
    pub ffn_form: FfnForm,
    pub per_head_projectors: bool,
    pub replacement: ReplacementStrategy,
    pub projector: ProjectorConfig,
}

impl ModelConfig {
    /// Classic-8M column: 512 / 2 / 8 / 2 / 1024.
    pub fn classic_8m() -> Self {
        Self {
            vocab_size: 6401,
            hidden_size: 512,
            num_layers: 2,
            num_heads: 8,
            num_kv_heads: 2,
            intermediate_size: 1024,
            max_seq_len: 4096,
            layer_norm_eps: 1e-5,
            dropout: 0.0,
            ffn_form: FfnForm::Gated,
            per_head_projectors: false,
            replacement: ReplacementStrategy::none(),
            projector: ProjectorConfig {
                n_qubits: 10,
                n_layers: 2,
                variant: qproj::AnsatzVariant::A8M,
                expand_mode: qproj::ExpandMode::Scalar,
            },
        }
    }

    /// Classic-150M column: 1024 / 16 / 8 / 2 / 2048.
    pub fn classic_150m() -> Self {
        Self {
            vocab_size: 6401,
            hidden_size: 1024,
            num_layers: 16,
            num_heads: 8,
            num_kv_heads: 2,
            intermediate_size: 2048,
            max_seq_len: 32768,
            projector: ProjectorConfig {
                n_qubits: 10,
                n_layers: 2,
                variant: qproj::AnsatzVariant::B150M,
                expand_mode: qproj::ExpandMode::Scalar,
            },
            ..Self::classic_8m()
        }
    }

    /// 8M with the FFN gate projection replaced.
    pub fn hybrid_8m() -> Self {
        let mut cfg = Self::classic_8m();
        cfg.replacement.insert(ReplacementTarget::FfnGate);
        cfg
    }

    /// 150M with the attention query projection replaced.
    pub fn hybrid_150m() -> Self {
        let mut cfg = Self::classic_150m();
        cfg.replacement.insert(ReplacementTarget::Wq);
        cfg
    }

    pub fn with_replacement(&self, replacement: ReplacementStrategy) -> Self {
        let mut cfg = self.clone();
        cfg.replacement = replacement;
        cfg
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_heads
    }

    pub fn kv_width(&self) -> usize {
        self.num_kv_heads * self.head_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.vocab_size == 0 {
            return fail("vocab_size must be positive".into());
        }
        if self.hidden_size % self.num_heads != 0 {
            return fail(format!(
                "hidden_size {} not divisible by num_attention_heads {}",
                self.hidden_size, self.num_heads
            ));
        }
        if self.num_heads % self.num_kv_heads != 0 {
            return fail(format!(
                "num_attention_heads {} not divisible by num_key_value_heads {}",
                self.num_heads, self.num_kv_heads
            ));
        }
        if self.num_layers == 0 || self.max_seq_len == 0 {
            return fail("layer count and max_position_embeddings must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.layer_norm_eps <= 0.0 {
            return fail("layer_norm_eps must be positive".into());
        }
        Ok(())
    }
}
