use qproj::{AnsatzVariant, ExpandMode};
use tmodel::{FfnForm, ModelConfig, ReplacementStrategy};
use train::{GradMode, TrainConfig};

use crate::{CliError, Result};

/// Parsed configuration file: `[model]` and `[projector]` populate the
/// model config, `[train]` the optimizer schedule. A vocab_size of 0 (or
/// an absent key) means "derive from the corpus when training".
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab_from_corpus: bool,
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String, String)>> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", idx + 1))
        })?;
        out.push((
            section.clone(),
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }
    Ok(out)
}

fn bad_value(section: &str, key: &str, value: &str) -> CliError {
    CliError::Usage(format!("config key `{section}.{key}`: bad value `{value}`"))
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut model = ModelConfig::classic_8m();
    model.vocab_size = 0; // sentinel: derive from corpus unless set
    let mut train = TrainConfig::defaults(8, 64, 200, 42);
    let mut explicit_warmup = false;
    let mut explicit_cycle = false;
    let mut seq_len_set = false;

    for (section, key, value) in parse_pairs(text)? {
        let u = || value.parse::<usize>().map_err(|_| bad_value(&section, &key, &value));
        let u64v = || value.parse::<u64>().map_err(|_| bad_value(&section, &key, &value));
        let f = || value.parse::<f64>().map_err(|_| bad_value(&section, &key, &value));
        match (section.as_str(), key.as_str()) {
            ("model", "vocab_size") => model.vocab_size = u()?,
            ("model", "hidden_size") => model.hidden_size = u()?,
            ("model", "num_hidden_layers") => model.num_layers = u()?,
            ("model", "num_attention_heads") => model.num_heads = u()?,
            ("model", "num_key_value_heads") => model.num_kv_heads = u()?,
            ("model", "intermediate_size") => model.intermediate_size = u()?,
            ("model", "max_position_embeddings") => model.max_seq_len = u()?,
            ("model", "seq_len") => {
                train.seq_len = u()?;
                seq_len_set = true;
            }
            ("model", "layer_norm_eps") => model.layer_norm_eps = f()?,
            ("model", "replace") => {
                model.replacement = ReplacementStrategy::parse(&value)
                    .map_err(|e| CliError::Usage(format!("config key `model.replace`: {e}")))?;
            }
            ("model", "ffn_form") => {
                model.ffn_form = match value.to_ascii_lowercase().as_str() {
                    "gated" => FfnForm::Gated,
                    "plain" => FfnForm::Plain,
                    _ => return Err(bad_value(&section, &key, &value)),
                }
            }
            ("model", "per_head_projectors") => {
                model.per_head_projectors =
                    value.parse::<bool>().map_err(|_| bad_value(&section, &key, &value))?;
            }
            ("projector", "n_q") => model.projector.n_qubits = u()?,
            ("projector", "n_layers") => model.projector.n_layers = u()?,
            ("projector", "variant") => {
                model.projector.variant = AnsatzVariant::parse(&value)
                    .ok_or_else(|| bad_value(&section, &key, &value))?;
            }
            ("projector", "expand_mode") => {
                model.projector.expand_mode =
                    ExpandMode::parse(&value).ok_or_else(|| bad_value(&section, &key, &value))?;
            }
            ("train", "batch_size") => train.batch_size = u()?,
            ("train", "total_steps") => train.total_steps = u64v()?,
            ("train", "warmup_steps") => {
                train.warmup_steps = u64v()?;
                explicit_warmup = true;
            }
            ("train", "cycle_steps") => {
                train.cycle_steps = u64v()?;
                explicit_cycle = true;
            }
            ("train", "eta_max") => train.eta_max = f()?,
            ("train", "eta_min") => train.eta_min = f()?,
            ("train", "beta1") => train.beta1 = f()?,
            ("train", "beta2") => train.beta2 = f()?,
            ("train", "eps") => train.eps = f()?,
            ("train", "fd_delta") => train.fd_delta = f()?,
            ("train", "seed") => train.seed = u64v()?,
            ("train", "dropout") => {
                train.dropout = f()?;
                model.dropout = train.dropout;
            }
            ("train", "grad_mode") => {
                train.grad_mode =
                    GradMode::parse(&value).ok_or_else(|| bad_value(&section, &key, &value))?;
            }
            ("train", "clip_norm") => {
                train.clip_norm = if value.eq_ignore_ascii_case("off") {
                    None
                } else {
                    Some(f()?)
                };
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown config key `{section}.{key}`"
                )))
            }
        }
    }

    if !explicit_warmup {
        train.warmup_steps = (train.total_steps / 20).max(1);
    }
    if !explicit_cycle {
        train.cycle_steps = (train.total_steps - train.warmup_steps).max(1);
    }
    if !seq_len_set {
        train.seq_len = model.max_seq_len.min(64);
    }
    train.batch_size = train.batch_size.max(1);

    let vocab_from_corpus = model.vocab_size == 0;
    if vocab_from_corpus {
        // placeholder so shape validation passes; resolved before use
        model.vocab_size = 4;
    }
    model
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    train.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    Ok(FileConfig {
        model,
        train,
        vocab_from_corpus,
    })
}

pub fn load_config(path: &std::path::Path) -> Result<FileConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io("reading config file", e))?;
    parse_config(&text)
}

/// Canonical rendering with every key explicit; embedded in checkpoints so
/// resume can do a field-level comparison.
pub fn canonical_config_text(model: &ModelConfig, train: &TrainConfig) -> String {
    let clip = train
        .clip_norm
        .map_or("off".to_string(), |c| format!("{c}"));
    format!(
        "[model]\n\
         vocab_size = {}\n\
         hidden_size = {}\n\
         num_hidden_layers = {}\n\
         num_attention_heads = {}\n\
         num_key_value_heads = {}\n\
         intermediate_size = {}\n\
         max_position_embeddings = {}\n\
         seq_len = {}\n\
         layer_norm_eps = {}\n\
         replace = {}\n\
         ffn_form = {}\n\
         per_head_projectors = {}\n\
         \n\
         [projector]\n\
         n_q = {}\n\
         n_layers = {}\n\
         variant = {}\n\
         expand_mode = {}\n\
         \n\
         [train]\n\
         batch_size = {}\n\
         total_steps = {}\n\
         warmup_steps = {}\n\
         cycle_steps = {}\n\
         eta_max = {}\n\
         eta_min = {}\n\
         beta1 = {}\n\
         beta2 = {}\n\
         eps = {}\n\
         fd_delta = {}\n\
         seed = {}\n\
         dropout = {}\n\
         grad_mode = {}\n\
         clip_norm = {}\n",
        model.vocab_size,
        model.hidden_size,
        model.num_layers,
        model.num_heads,
        model.num_kv_heads,
        model.intermediate_size,
        model.max_seq_len,
        train.seq_len,
        model.layer_norm_eps,
        model.replacement,
        match model.ffn_form {
            FfnForm::Gated => "gated",
            FfnForm::Plain => "plain",
        },
        model.per_head_projectors,
        model.projector.n_qubits,
        model.projector.n_layers,
        model.projector.variant.name(),
        model.projector.expand_mode.name(),
        train.batch_size,
        train.total_steps,
        train.warmup_steps,
        train.cycle_steps,
        train.eta_max,
        train.eta_min,
        train.beta1,
        train.beta2,
        train.eps,
        train.fd_delta,
        train.seed,
        train.dropout,
        train.grad_mode.name(),
        clip,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# toy setup
[model]
vocab_size = 6401
hidden_size = 512
num_hidden_layers = 2
num_attention_heads = 8
num_key_value_heads = 2
intermediate_size = 1024
max_position_embeddings = 4096
seq_len = 512
replace = [FFN_gate]

[projector]
n_q = 10
n_layers = 2
variant = A8M
expand_mode = scalar

[train]
batch_size = 8
total_steps = 200
eta_max = 3e-4
eta_min = 3e-5
fd_delta = 1e-4
seed = 42
dropout = 0.0
grad_mode = adjoint
";

    #[test]
    fn sample_parses_to_hybrid_8m() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.model, ModelConfig::hybrid_8m());
        assert!(!cfg.vocab_from_corpus);
        assert_eq!(cfg.train.seq_len, 512);
        assert_eq!(cfg.train.warmup_steps, 10); // 5% default
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let err = parse_config("[model]\nhiden_size = 8\n").unwrap_err();
        assert!(err.to_string().contains("model.hiden_size"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_value_is_usage_error() {
        let err = parse_config("[train]\ntotal_steps = soon\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = parse_config(SAMPLE).unwrap();
        let text = canonical_config_text(&cfg.model, &cfg.train);
        let reparsed = parse_config(&text).unwrap();
        assert_eq!(reparsed.model, cfg.model);
        assert_eq!(reparsed.train, cfg.train);
    }

    #[test]
    fn absent_vocab_defers_to_corpus() {
        let cfg = parse_config("[model]\nhidden_size = 32\nnum_attention_heads = 4\nnum_key_value_heads = 2\n").unwrap();
        assert!(cfg.vocab_from_corpus);
    }
}
