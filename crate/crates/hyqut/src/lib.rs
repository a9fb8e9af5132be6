//! CLI plumbing: configuration files, corpus ingestion with the sub-512
//! length filter, the character-level tokenizer, deterministic batching,
//! and the command implementations behind the `hyqut` binary.

pub mod batches;
pub mod commands;
pub mod config_file;
pub mod corpus;
pub mod error;
pub mod tokenizer;

pub use batches::BatchPlan;
pub use config_file::{canonical_config_text, parse_config, FileConfig};
pub use corpus::{ingest, Corpus};
pub use error::CliError;
pub use tokenizer::Tokenizer;

pub type Result<T> = std::result::Result<T, CliError>;
