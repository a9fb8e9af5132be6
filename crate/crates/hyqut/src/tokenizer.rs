use std::collections::HashMap;
use std::path::Path;

use crate::corpus::Corpus;
use crate::{CliError, Result};

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
const SPECIALS: usize = 4;

/// Character-level tokenizer: four specials (PAD, BOS, EOS, UNK) followed
/// by the corpus alphabet sorted by codepoint. Deterministic for a given
/// corpus; characters outside the alphabet encode to UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    chars: Vec<char>,
    ids: HashMap<char, u32>,
}

impl Tokenizer {
    pub fn build(corpus: &Corpus) -> Result<Self> {
        if corpus.samples.is_empty() {
            return Err(CliError::Usage(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        let mut chars: Vec<char> = corpus
            .samples
            .iter()
            .flat_map(|s| s.chars())
            .collect::<std::collections::BTreeSet<char>>()
            .into_iter()
            .collect();
        chars.sort_unstable();
        Ok(Self::from_chars(chars))
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        let ids = chars
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, (i + SPECIALS) as u32))
            .collect();
        Self { chars, ids }
    }

    pub fn vocab_size(&self) -> usize {
        SPECIALS + self.chars.len()
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.chars()
            .map(|c| self.ids.get(&c).copied().unwrap_or(UNK_ID))
            .collect()
    }

    /// Specials decode to nothing; UNK decodes to U+FFFD.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            match id {
                PAD_ID | BOS_ID | EOS_ID => {}
                UNK_ID => out.push('\u{FFFD}'),
                other => {
                    if let Some(c) = self.chars.get(other as usize - SPECIALS) {
                        out.push(*c);
                    }
                }
            }
        }
        out
    }

    /// One hex codepoint per line; reload with [`Tokenizer::load`].
    pub fn save(&self, path: &Path) -> Result<()> {
        let body: String = self
            .chars
            .iter()
            .map(|c| format!("{:x}\n", *c as u32))
            .collect();
        std::fs::write(path, body).map_err(|e| CliError::io("writing vocab file", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io("reading vocab file", e))?;
        let mut chars = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let code = u32::from_str_radix(line, 16)
                .map_err(|_| CliError::Usage(format!("vocab file line {}: bad codepoint", i + 1)))?;
            chars.push(char::from_u32(code).ok_or_else(|| {
                CliError::Usage(format!("vocab file line {}: invalid scalar {code:#x}", i + 1))
            })?);
        }
        Ok(Self::from_chars(chars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn corpus_of(samples: &[&str]) -> Corpus {
        Corpus {
            samples: samples.iter().map(|s| s.to_string()).collect(),
            kept: samples.len(),
            dropped: 0,
            source: PathBuf::from("<test>"),
        }
    }

    #[test]
    fn vocab_of_ab_has_size_six() {
        let tok = Tokenizer::build(&corpus_of(&["ab"])).unwrap();
        assert_eq!(tok.vocab_size(), 6);
        assert_eq!(tok.encode("ab"), vec![4, 5]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let tok = Tokenizer::build(&corpus_of(&["abba"])).unwrap();
        assert_eq!(tok.decode(&tok.encode("abba")), "abba");
    }

    #[test]
    fn unknown_chars_map_to_unk() {
        let tok = Tokenizer::build(&corpus_of(&["ab"])).unwrap();
        assert_eq!(tok.encode("abz"), vec![4, 5, UNK_ID]);
        assert_eq!(tok.decode(&[4, UNK_ID, 5]), "a\u{FFFD}b");
    }

    #[test]
    fn alphabet_is_sorted_by_codepoint() {
        let tok = Tokenizer::build(&corpus_of(&["cba", "bd"])).unwrap();
        assert_eq!(tok.encode("abcd"), vec![4, 5, 6, 7]);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(Tokenizer::build(&corpus_of(&[])).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let tok = Tokenizer::build(&corpus_of(&["héllo wörld"])).unwrap();
        tok.save(&path).unwrap();
        assert_eq!(Tokenizer::load(&path).unwrap(), tok);
    }
}
