use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyqut::commands::{
    cmd_ablate, cmd_count_params, cmd_export_loss, cmd_flops, cmd_generate, cmd_gradcheck,
    cmd_train, AblateArgs, GenerateArgs, GradcheckArgs, Overrides, TrainArgs,
};

/// Hybrid quantum-classical transformer: training, generation and
/// resource accounting from one binary.
#[derive(Parser)]
#[command(name = "hyqut", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct OverrideFlags {
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replacement strategy, e.g. "Wq,FFN_gate"
    #[arg(long)]
    replace: Option<String>,
    /// Expansion mode: scalar | full
    #[arg(long = "expand-mode")]
    expand_mode: Option<String>,
    /// Ansatz variant: A8M | B150M
    #[arg(long)]
    variant: Option<String>,
    /// Quantum gradient mode: adjoint | fd
    #[arg(long = "grad-mode")]
    grad_mode: Option<String>,
    /// Finite-difference step size
    #[arg(long)]
    delta: Option<f64>,
}

impl OverrideFlags {
    fn into_overrides(self, steps: Option<u64>) -> Overrides {
        Overrides {
            seed: self.seed,
            steps,
            replace: self.replace,
            expand_mode: self.expand_mode,
            variant: self.variant,
            grad_mode: self.grad_mode,
            delta: self.delta,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model, writing loss.csv, vocab.txt and model.ckpt
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Stop after N steps instead of the config total
        #[arg(long)]
        steps: Option<u64>,
        /// Resume from a checkpoint
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Also checkpoint every N steps
        #[arg(long = "save-every")]
        save_every: Option<u64>,
        #[arg(long)]
        quiet: bool,
        #[command(flatten)]
        overrides: OverrideFlags,
    },
    /// Sample text from a trained checkpoint
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        prompt: String,
        #[arg(long = "max-new", default_value_t = 64)]
        max_new: usize,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Layer-by-layer parameter breakdown for a config
    CountParams {
        #[arg(long)]
        config: PathBuf,
        /// Compare against the shipped 8M golden table
        #[arg(long)]
        golden: bool,
        /// Machine-readable CSV instead of the aligned table
        #[arg(long)]
        csv: bool,
    },
    /// FLOPs estimate and classical-computation percentage
    Flops {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "seq-len")]
        seq_len: Option<usize>,
    },
    /// The seven-row replacement-strategy table, optionally with smoke
    /// training verdicts
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long = "smoke-steps", default_value_t = 20)]
        smoke_steps: u64,
        #[command(flatten)]
        overrides: OverrideFlags,
    },
    /// Adjoint-vs-finite-difference gradient verification
    Gradcheck {
        #[arg(long, default_value_t = 4)]
        nq: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        #[arg(long, default_value_t = 25)]
        rounds: usize,
    },
    /// Convert a loss CSV into a plot-ready aligned text table
    ExportLoss {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(value) = std::env::var("HYQUT_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

fn run(cli: Cli) -> hyqut::Result<()> {
    match cli.command {
        Command::Train {
            config,
            corpus,
            out,
            steps,
            resume,
            save_every,
            quiet,
            overrides,
        } => cmd_train(&TrainArgs {
            config,
            corpus,
            out,
            resume,
            save_every,
            overrides: overrides.into_overrides(steps),
            quiet,
        }),
        Command::Generate {
            config,
            checkpoint,
            vocab,
            prompt,
            max_new,
            temperature,
            seed,
        } => cmd_generate(&GenerateArgs {
            config,
            checkpoint,
            vocab,
            prompt,
            max_new,
            temperature,
            seed,
            overrides: Overrides::default(),
        }),
        Command::CountParams {
            config,
            golden,
            csv,
        } => cmd_count_params(&config, golden, csv),
        Command::Flops { config, seq_len } => cmd_flops(&config, seq_len),
        Command::Ablate {
            config,
            corpus,
            smoke_steps,
            overrides,
        } => cmd_ablate(&AblateArgs {
            config,
            corpus,
            smoke_steps,
            overrides: overrides.into_overrides(None),
        }),
        Command::Gradcheck {
            nq,
            seed,
            delta,
            rounds,
        } => cmd_gradcheck(&GradcheckArgs {
            n_qubits: nq,
            seed,
            delta,
            rounds,
        }),
        Command::ExportLoss { csv, out } => cmd_export_loss(&csv, out.as_deref()),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
