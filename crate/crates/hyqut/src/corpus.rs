use std::path::{Path, PathBuf};

use crate::{CliError, Result};

/// Line-per-sample corpus with the character-length filter applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub samples: Vec<String>,
    pub kept: usize,
    pub dropped: usize,
    pub source: PathBuf,
}

/// Reads a UTF-8 text file, one sample per line, keeping samples whose
/// character length is strictly below `max_chars`. Blank lines are not
/// samples. Invalid UTF-8 reports the offending line number.
pub fn ingest(path: &Path, max_chars: usize) -> Result<Corpus> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io("reading corpus", e))?;
    let mut samples = Vec::new();
    let mut kept = 0usize;
    let mut dropped = 0usize;
    for (idx, raw) in bytes.split(|b| *b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.is_empty() {
            continue;
        }
        let line = std::str::from_utf8(raw).map_err(|_| {
            CliError::Io(format!(
                "corpus {}: invalid UTF-8 on line {}",
                path.display(),
                idx + 1
            ))
        })?;
        if line.chars().count() < max_chars {
            samples.push(line.to_string());
            kept += 1;
        } else {
            dropped += 1;
        }
    }
    Ok(Corpus {
        samples,
        kept,
        dropped,
        source: path.to_path_buf(),
    })
}
