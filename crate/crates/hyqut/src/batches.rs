use qsim::rng::Prng;
use train::Batch;

use crate::corpus::Corpus;
use crate::tokenizer::{Tokenizer, BOS_ID, EOS_ID, PAD_ID};
use crate::{CliError, Result};

/// Deterministic batch source: each epoch shuffles the sample order with a
/// seed derived from (seed, epoch), so the batch at step t is a pure
/// function of (corpus, tokenizer, B, L, seed, t); that is what lets a
/// checkpoint resume replay the identical stream.
#[derive(Debug, Clone)]
pub struct BatchPlan {
    encoded: Vec<Vec<u32>>,
    batch_size: usize,
    seq_len: usize,
    seed: u64,
    batches_per_epoch: u64,
}

impl BatchPlan {
    pub fn new(
        corpus: &Corpus,
        tokenizer: &Tokenizer,
        batch_size: usize,
        seq_len: usize,
        seed: u64,
    ) -> Result<Self> {
        if corpus.samples.is_empty() {
            return Err(CliError::Usage("corpus has no usable samples".into()));
        }
        if batch_size == 0 || seq_len == 0 {
            return Err(CliError::Usage("batch_size and seq_len must be positive".into()));
        }
        if batch_size > corpus.samples.len() {
            return Err(CliError::Usage(format!(
                "batch_size {batch_size} exceeds corpus capacity ({} samples)",
                corpus.samples.len()
            )));
        }
        let encoded = corpus
            .samples
            .iter()
            .map(|s| {
                let mut ids = Vec::with_capacity(s.chars().count() + 2);
                ids.push(BOS_ID);
                ids.extend(tokenizer.encode(s));
                ids.push(EOS_ID);
                ids
            })
            .collect::<Vec<_>>();
        let batches_per_epoch = (encoded.len() / batch_size) as u64;
        Ok(Self {
            encoded,
            batch_size,
            seq_len,
            seed,
            batches_per_epoch,
        })
    }

    pub fn batches_per_epoch(&self) -> u64 {
        self.batches_per_epoch
    }

    /// Batch for 1-based step `t`. Inputs are the first L ids of the
    /// (BOS, text, EOS) stream padded with PAD; targets are the same
    /// stream shifted by one, so `targets[b][i] == tokens[b][i+1]`.
    pub fn batch_at(&self, step: u64) -> Batch {
        let index = step.saturating_sub(1);
        let epoch = index / self.batches_per_epoch;
        let slot = (index % self.batches_per_epoch) as usize;

        let mut order: Vec<usize> = (0..self.encoded.len()).collect();
        let mut rng = Prng::new(self.seed ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        rng.shuffle(&mut order);

        let mut tokens = Vec::with_capacity(self.batch_size * self.seq_len);
        let mut targets = Vec::with_capacity(self.batch_size * self.seq_len);
        for b in 0..self.batch_size {
            let sample = &self.encoded[order[slot * self.batch_size + b]];
            for i in 0..self.seq_len {
                tokens.push(sample.get(i).copied().unwrap_or(PAD_ID));
                targets.push(sample.get(i + 1).copied().unwrap_or(PAD_ID));
            }
        }
        Batch {
            batch: self.batch_size,
            seq: self.seq_len,
            tokens,
            targets,
        }
    }
}
