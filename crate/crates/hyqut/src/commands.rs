//! Implementations behind the CLI subcommands. Everything here is
//! deterministic given (config, seed): batch order, dropout masks, and
//! sampling all derive from the seeded generator, and the loss CSV is
//! reproducible column-for-column apart from tokens_per_sec (wall clock).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qproj::{quantum_grad_fd, AnsatzDescriptor, AnsatzVariant, ExpandMode, FeatureTensor};
use qsim::rng::Prng;
use tmodel::Model;
use train::{
    load_checkpoint, restore, save_checkpoint, train_step, AdamState, GradMode, TrainConfig,
};

use crate::batches::BatchPlan;
use crate::config_file::{canonical_config_text, load_config, FileConfig};
use crate::corpus::ingest;
use crate::tokenizer::{Tokenizer, BOS_ID};
use crate::{CliError, Result};

/// Flag-level overrides applied on top of the parsed config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub replace: Option<String>,
    pub expand_mode: Option<String>,
    pub variant: Option<String>,
    pub grad_mode: Option<String>,
    pub delta: Option<f64>,
}

pub fn apply_overrides(cfg: &mut FileConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        cfg.train.seed = seed;
    }
    // ov.steps caps the training loop only; the schedule (total, warmup,
    // cycle) stays as configured so a resumed run replays identically.
    if let Some(replace) = &ov.replace {
        cfg.model.replacement = tmodel::ReplacementStrategy::parse(replace)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(mode) = &ov.expand_mode {
        cfg.model.projector.expand_mode = ExpandMode::parse(mode)
            .ok_or_else(|| CliError::Usage(format!("unknown expand mode `{mode}`")))?;
    }
    if let Some(variant) = &ov.variant {
        cfg.model.projector.variant = AnsatzVariant::parse(variant)
            .ok_or_else(|| CliError::Usage(format!("unknown ansatz variant `{variant}`")))?;
    }
    if let Some(mode) = &ov.grad_mode {
        cfg.train.grad_mode = GradMode::parse(mode)
            .ok_or_else(|| CliError::Usage(format!("unknown grad mode `{mode}`")))?;
    }
    if let Some(delta) = ov.delta {
        cfg.train.fd_delta = delta;
    }
    cfg.train
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

/// Keeps only the `[model]` and `[projector]` sections of a config text.
fn model_sections_only(text: &str) -> String {
    let mut out = String::new();
    let mut keep = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            keep = trimmed == "[model]" || trimmed == "[projector]";
        }
        if keep {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn resolve_vocab(cfg: &mut FileConfig, tokenizer: &Tokenizer) -> Result<()> {
    if cfg.vocab_from_corpus {
        cfg.model.vocab_size = tokenizer.vocab_size();
    } else if tokenizer.vocab_size() > cfg.model.vocab_size {
        return Err(CliError::Usage(format!(
            "corpus alphabet needs {} ids but vocab_size is {}",
            tokenizer.vocab_size(),
            cfg.model.vocab_size
        )));
    }
    Ok(())
}

pub struct TrainArgs {
    pub config: PathBuf,
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub resume: Option<PathBuf>,
    pub save_every: Option<u64>,
    pub overrides: Overrides,
    pub quiet: bool,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, &args.overrides)?;

    let corpus = ingest(&args.corpus, 512)?;
    if !args.quiet {
        println!(
            "corpus: {} samples kept, {} dropped (length >= 512)",
            corpus.kept, corpus.dropped
        );
    }
    let tokenizer = Tokenizer::build(&corpus)?;
    resolve_vocab(&mut cfg, &tokenizer)?;
    let canonical = canonical_config_text(&cfg.model, &cfg.train);

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io("creating output dir", e))?;
    tokenizer.save(&args.out.join("vocab.txt"))?;

    let mut model = Model::init(cfg.model.clone(), cfg.train.seed)?;
    let mut opt = AdamState::new();
    let mut start_step = 0u64;
    if let Some(ckpt) = &args.resume {
        let data = load_checkpoint(ckpt)?;
        restore(&mut model, &mut opt, &data, Some(&canonical))?;
        start_step = data.step;
        if !args.quiet {
            println!("resumed from {} at step {start_step}", ckpt.display());
        }
    }

    let plan = BatchPlan::new(
        &corpus,
        &tokenizer,
        cfg.train.batch_size,
        cfg.train.seq_len,
        cfg.train.seed,
    )?;

    let csv_path = args.out.join("loss.csv");
    let mut csv = if start_step > 0 && csv_path.exists() {
        std::fs::OpenOptions::new()
            .append(true)
            .open(&csv_path)
            .map_err(|e| CliError::io("opening loss csv", e))?
    } else {
        let mut f =
            std::fs::File::create(&csv_path).map_err(|e| CliError::io("creating loss csv", e))?;
        writeln!(f, "step,lr,loss,tokens_per_sec").map_err(|e| CliError::io("writing csv", e))?;
        f
    };

    let total = args.overrides.steps.unwrap_or(cfg.train.total_steps);
    let ckpt_path = args.out.join("model.ckpt");
    if start_step >= total {
        // resumed past the requested horizon; still leave a checkpoint in
        // the output directory
        save_checkpoint(&model, &opt, start_step, &canonical, &ckpt_path)?;
    }
    for step in start_step + 1..=total {
        let batch = plan.batch_at(step);
        let clock = Instant::now();
        let stats = train_step(&mut model, &batch, &mut opt, &cfg.train, step)?;
        let elapsed = clock.elapsed().as_secs_f64().max(1e-9);
        let tps = stats.tokens as f64 / elapsed;
        writeln!(csv, "{},{},{},{:.1}", step, stats.lr, stats.loss, tps)
            .map_err(|e| CliError::io("writing csv", e))?;
        csv.flush().map_err(|e| CliError::io("flushing csv", e))?;
        if !args.quiet && (step % 50 == 0 || step == total) {
            println!("step {step}/{total}  loss {:.4}  lr {:.2e}", stats.loss, stats.lr);
        }
        if args.save_every.is_some_and(|n| step % n == 0) || step == total {
            save_checkpoint(&model, &opt, step, &canonical, &ckpt_path)?;
        }
    }
    if !args.quiet {
        println!("checkpoint: {}", ckpt_path.display());
        println!("loss log:   {}", csv_path.display());
    }
    Ok(())
}

pub struct GenerateArgs {
    pub config: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub vocab: PathBuf,
    pub prompt: String,
    pub max_new: usize,
    pub temperature: f64,
    pub seed: u64,
    pub overrides: Overrides,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    if args.prompt.is_empty() {
        return Err(CliError::Usage("prompt must not be empty".into()));
    }
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, &args.overrides)?;
    let tokenizer = Tokenizer::load(&args.vocab)?;
    resolve_vocab(&mut cfg, &tokenizer)?;

    let mut model = Model::init(cfg.model.clone(), cfg.train.seed)?;
    if let Some(ckpt) = &args.checkpoint {
        // only the model-identity sections must agree; the [train]
        // schedule is irrelevant to inference
        let canonical = canonical_config_text(&cfg.model, &cfg.train);
        let data = load_checkpoint(ckpt)?;
        let diffs = train::diff_config_texts(
            &model_sections_only(&canonical),
            &model_sections_only(&data.config_text),
        );
        if !diffs.is_empty() {
            return Err(CliError::Usage(format!(
                "checkpoint model config disagrees with current config:\n{}",
                diffs.join("\n")
            )));
        }
        restore(&mut model, &mut AdamState::new(), &data, None)?;
    }

    let mut prompt_ids = vec![BOS_ID];
    prompt_ids.extend(tokenizer.encode(&args.prompt));
    let out = model.generate(&prompt_ids, args.max_new, args.temperature, args.seed)?;
    println!("{}", tokenizer.decode(&out));
    Ok(())
}

pub fn cmd_count_params(config: &Path, golden: bool, csv: bool) -> Result<()> {
    let cfg = load_config(config)?;
    if cfg.vocab_from_corpus {
        return Err(CliError::Usage(
            "count-params needs an explicit vocab_size in [model]".into(),
        ));
    }
    let report = accounting::count_params(&cfg.model);
    let rendered = accounting::render_appendix_table(&report);
    if csv {
        print!("{}", accounting::render_csv(&report));
    } else {
        print!("{rendered}");
    }
    if golden {
        if rendered == accounting::HYQUT8M_GOLDEN {
            println!("golden: OK");
        } else {
            let diff: Vec<String> = rendered
                .lines()
                .zip(accounting::HYQUT8M_GOLDEN.lines())
                .filter(|(a, b)| a != b)
                .map(|(a, b)| format!("  got:      {a}\n  expected: {b}"))
                .collect();
            return Err(CliError::Numerical(format!(
                "parameter table deviates from the golden fixture:\n{}",
                diff.join("\n")
            )));
        }
    }
    Ok(())
}

pub fn cmd_flops(config: &Path, seq_len: Option<usize>) -> Result<()> {
    let cfg = load_config(config)?;
    if cfg.vocab_from_corpus {
        return Err(CliError::Usage(
            "flops needs an explicit vocab_size in [model]".into(),
        ));
    }
    let seq_len = seq_len.unwrap_or(cfg.train.seq_len);
    let report = accounting::estimate_flops(&cfg.model, seq_len);
    let pct = accounting::classical_computation_pct(&cfg.model, seq_len);
    let (gates, theta) = accounting::gate_and_param_census(&cfg.model.projector);
    println!("sequence length:        {seq_len}");
    println!("weight FLOPs per token: {:.3e}", report.weight_flops_per_token);
    println!("attention FLOPs:        {:.3e}", report.attention_flops);
    println!("total FLOPs:            {:.3e}", report.total_flops);
    println!("classical computation:  {pct:.2}% of baseline weight compute");
    println!("quantum census:         {gates} ansatz gates, {theta} trainable parameters per module");
    Ok(())
}

pub struct AblateArgs {
    pub config: PathBuf,
    pub corpus: Option<PathBuf>,
    pub smoke_steps: u64,
    pub overrides: Overrides,
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, &args.overrides)?;

    let smoke_data = match &args.corpus {
        Some(path) => {
            let corpus = ingest(path, 512)?;
            let tokenizer = Tokenizer::build(&corpus)?;
            resolve_vocab(&mut cfg, &tokenizer)?;
            let plan = BatchPlan::new(
                &corpus,
                &tokenizer,
                cfg.train.batch_size,
                cfg.train.seq_len,
                cfg.train.seed,
            )?;
            Some(plan)
        }
        None => {
            if cfg.vocab_from_corpus {
                return Err(CliError::Usage(
                    "ablate needs either an explicit vocab_size or --corpus".into(),
                ));
            }
            None
        }
    };

    println!(
        "{:<28} {:>14} {:>16} {:>12} {:>10}",
        "Replacement Target", "Parameters (M)", "Weight FLOPs", "Classical %", "Converged"
    );
    for (label, strategy) in accounting::table2_strategies() {
        let row_cfg = cfg.model.with_replacement(strategy);
        let params = accounting::count_params(&row_cfg).total as f64 / 1e6;
        let flops = accounting::estimate_flops(&row_cfg, cfg.train.seq_len);
        let pct = accounting::classical_computation_pct(&row_cfg, cfg.train.seq_len);
        let verdict = match &smoke_data {
            None => "-".to_string(),
            Some(plan) => {
                let mut smoke_cfg = cfg.train.clone();
                smoke_cfg.total_steps = args.smoke_steps.max(2);
                smoke_cfg.warmup_steps = (smoke_cfg.total_steps / 10).max(1);
                smoke_cfg.cycle_steps = (smoke_cfg.total_steps - smoke_cfg.warmup_steps).max(1);
                match run_smoke(&row_cfg, &smoke_cfg, plan) {
                    Ok((first, last)) if last <= first => "yes".to_string(),
                    Ok(_) => "no".to_string(),
                    Err(_) => "failed".to_string(),
                }
            }
        };
        println!(
            "{:<28} {:>14.3} {:>16.4e} {:>11.2}% {:>10}",
            label,
            params,
            flops.seq_len as f64 * flops.weight_flops_per_token,
            pct,
            verdict
        );
    }
    Ok(())
}

fn run_smoke(
    model_cfg: &tmodel::ModelConfig,
    train_cfg: &TrainConfig,
    plan: &BatchPlan,
) -> Result<(f64, f64)> {
    let mut model = Model::init(model_cfg.clone(), train_cfg.seed)?;
    let mut opt = AdamState::new();
    let mut first = f64::NAN;
    let mut last = f64::NAN;
    for step in 1..=train_cfg.total_steps {
        let stats = train_step(&mut model, &plan.batch_at(step), &mut opt, train_cfg, step)?;
        if step == 1 {
            first = stats.loss;
        }
        last = stats.loss;
    }
    Ok((first, last))
}

pub struct GradcheckArgs {
    pub n_qubits: usize,
    pub seed: u64,
    pub delta: f64,
    pub rounds: usize,
}

/// Adjoint-vs-FD verification over random isolated circuits plus a small
/// projector; prints the worst relative error (1e-8 absolute floor).
pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let mut rng = Prng::new(args.seed);
    let mut worst: f64 = 0.0;

    let rel = |a: f64, b: f64| -> f64 {
        let diff = (a - b).abs();
        if diff <= 1e-8 {
            0.0
        } else {
            diff / a.abs().max(b.abs())
        }
    };

    for round in 0..args.rounds {
        let variant = if round % 2 == 0 {
            AnsatzVariant::A8M
        } else {
            AnsatzVariant::B150M
        };
        let ansatz = AnsatzDescriptor::new(variant, args.n_qubits, 1 + round % 2)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let n_q = args.n_qubits;
        let enc_theta: Vec<f64> = (0..n_q).map(|_| rng.uniform(0.2, 2.9)).collect();
        let enc_phi: Vec<f64> = (0..n_q).map(|_| rng.uniform(0.2, 2.9)).collect();
        let theta: Vec<f64> = (0..ansatz.trainable_param_count())
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect();
        let lambda: Vec<f64> = (0..n_q).map(|_| rng.uniform(-1.0, 1.0)).collect();

        let circuit = qproj::full_circuit(&enc_theta, &enc_phi, &ansatz, &theta)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let adj = qproj::adjoint_gradients(&circuit, n_q, &lambda, theta.len())
            .map_err(|e| CliError::Usage(e.to_string()))?;

        let mut flat = enc_theta.clone();
        flat.extend_from_slice(&enc_phi);
        flat.extend_from_slice(&theta);
        let fd = quantum_grad_fd(
            |p| {
                let (et, rest) = p.split_at(n_q);
                let (ep, th) = rest.split_at(n_q);
                let c = qproj::full_circuit(et, ep, &ansatz, th).unwrap();
                let state = qproj::run_circuit(&c, n_q).unwrap();
                state
                    .measure_all_z()
                    .iter()
                    .zip(&lambda)
                    .map(|(m, l)| m * l)
                    .sum()
            },
            &flat,
            args.delta,
        )
        .map_err(|e| CliError::Numerical(e.to_string()))?;

        let adj_flat: Vec<f64> = adj
            .enc_theta
            .iter()
            .chain(&adj.enc_phi)
            .chain(&adj.ansatz)
            .copied()
            .collect();
        for (a, f) in adj_flat.iter().zip(&fd) {
            worst = worst.max(rel(*a, *f));
        }
    }

    // projector-level: θ and b_down against FD of the module loss
    let proj_cfg = qproj::ProjectorConfig {
        n_qubits: args.n_qubits.min(6),
        n_layers: 2,
        variant: AnsatzVariant::B150M,
        expand_mode: ExpandMode::Scalar,
    };
    let projector = qproj::QuantumProjector::init(5, 4, &proj_cfg, &mut rng)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let x = FeatureTensor::from_vec(1, 3, 5, (0..15).map(|_| rng.uniform(-1.5, 1.5)).collect())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let weights: Vec<f64> = (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let loss = |p: &qproj::QuantumProjector| -> f64 {
        p.forward(&x)
            .unwrap()
            .data()
            .iter()
            .zip(&weights)
            .map(|(o, c)| o * c)
            .sum()
    };
    let (_, cache) = projector
        .forward_cached(&x)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let upstream = FeatureTensor::from_vec(1, 3, 4, weights.clone())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (grads, _) = projector
        .backward(&cache, &upstream)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    for idx in 0..grads.theta.len() {
        let mut plus = projector.clone();
        plus.theta_mut()[idx] += args.delta;
        let mut minus = projector.clone();
        minus.theta_mut()[idx] -= args.delta;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * args.delta);
        worst = worst.max(rel(grads.theta[idx], fd));
    }
    for idx in 0..grads.b_down.len() {
        let mut plus = projector.clone();
        plus.b_down_mut()[idx] += args.delta;
        let mut minus = projector.clone();
        minus.b_down_mut()[idx] -= args.delta;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * args.delta);
        worst = worst.max(rel(grads.b_down[idx], fd));
    }

    println!(
        "gradcheck: {} circuit rounds on {} qubits, delta {:.1e}",
        args.rounds, args.n_qubits, args.delta
    );
    println!("max relative error: {worst:.3e}");
    if worst < 1e-5 {
        println!("verdict: PASS (< 1e-5)");
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "adjoint vs finite-difference relative error {worst:.3e} >= 1e-5"
        )))
    }
}

pub fn cmd_export_loss(csv_path: &Path, out: Option<&Path>) -> Result<()> {
    let text =
        std::fs::read_to_string(csv_path).map_err(|e| CliError::io("reading loss csv", e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 && line.starts_with("step,") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(CliError::Usage(format!(
                "loss csv line {}: expected step,lr,loss[,tokens_per_sec]",
                idx + 1
            )));
        }
        let step: u64 = fields[0]
            .parse()
            .map_err(|_| CliError::Usage(format!("loss csv line {}: bad step", idx + 1)))?;
        let lr: f64 = fields[1]
            .parse()
            .map_err(|_| CliError::Usage(format!("loss csv line {}: bad lr", idx + 1)))?;
        let loss: f64 = fields[2]
            .parse()
            .map_err(|_| CliError::Usage(format!("loss csv line {}: bad loss", idx + 1)))?;
        rows.push((step, lr, loss));
    }

    let mut table = String::new();
    table.push_str(&format!("{:>8}  {:>12}  {:>12}\n", "step", "lr", "loss"));
    for (step, lr, loss) in &rows {
        table.push_str(&format!("{step:>8}  {lr:>12.6e}  {loss:>12.6}\n"));
    }
    match out {
        Some(path) => {
            std::fs::write(path, table).map_err(|e| CliError::io("writing loss table", e))?
        }
        None => print!("{table}"),
    }
    Ok(())
}
