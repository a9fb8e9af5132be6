//! Versioned checkpoint container: magic, format version, embedded config
//! text, then named tensors (name, dims, little-endian f64 payload).
//! Model parameters and both Adam moments round-trip bit-exactly, so a
//! resumed run continues the identical loss trace.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use tmodel::Model;

use crate::adam::AdamState;
use crate::{Result, TrainError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HYQTCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_F64: u8 = 1;

#[derive(Debug, Clone)]
pub struct CheckpointData {
    pub config_text: String,
    pub step: u64,
    pub tensors: BTreeMap<String, Vec<f64>>,
}

pub fn save_checkpoint(
    model: &Model,
    opt: &AdamState,
    step: u64,
    config_text: &str,
    path: &Path,
) -> Result<()> {
    let mut tensors: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit_params(&mut |name, values| {
        tensors.push((name.to_string(), values.to_vec()));
    });
    for (name, (m, v)) in &opt.moments {
        tensors.push((format!("adam.m.{name}"), m.clone()));
        tensors.push((format!("adam.v.{name}"), v.clone()));
    }

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let cfg_bytes = config_text.as_bytes();
    buf.extend_from_slice(&(cfg_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(cfg_bytes);
    buf.extend_from_slice(&step.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, values) in &tensors {
        let name_bytes = name.as_bytes();
        buf.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        buf.extend_from_slice(name_bytes);
        buf.push(DTYPE_F64);
        buf.push(1); // flat layout, one dimension
        buf.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointData> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;

    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > bytes.len() {
            return Err(TrainError::Corrupt(format!(
                "truncated at byte {} (wanted {n} more)",
                *cursor
            )));
        }
        let slice = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(slice)
    };

    if take(&mut cursor, 8)? != CHECKPOINT_MAGIC {
        return Err(TrainError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(TrainError::UnsupportedVersion(version));
    }
    let cfg_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let config_text = String::from_utf8(take(&mut cursor, cfg_len)?.to_vec())
        .map_err(|_| TrainError::Corrupt("config text is not UTF-8".into()))?;
    let step = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let tensor_count = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());

    let mut tensors = BTreeMap::new();
    for _ in 0..tensor_count {
        let name_len = u16::from_le_bytes(take(&mut cursor, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut cursor, name_len)?.to_vec())
            .map_err(|_| TrainError::Corrupt("tensor name is not UTF-8".into()))?;
        let dtype = take(&mut cursor, 1)?[0];
        let ndim = take(&mut cursor, 1)?[0] as usize;
        let mut len = 1usize;
        for _ in 0..ndim {
            len *= u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        }
        let values = match dtype {
            DTYPE_F64 => {
                let raw = take(&mut cursor, len * 8)?;
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            DTYPE_F32 => {
                let raw = take(&mut cursor, len * 4)?;
                raw.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect()
            }
            other => {
                return Err(TrainError::Corrupt(format!("unknown dtype tag {other}")));
            }
        };
        tensors.insert(name, values);
    }
    if cursor != bytes.len() {
        return Err(TrainError::Corrupt(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - cursor
        )));
    }
    Ok(CheckpointData {
        config_text,
        step,
        tensors,
    })
}

/// Key-level differences between two config texts (INI-style `key = value`
/// lines under `[section]` headers). Returns one line per differing key.
pub fn diff_config_texts(ours: &str, theirs: &str) -> Vec<String> {
    let parse = |text: &str| -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                map.insert(format!("{section}.{}", k.trim()), v.trim().to_string());
            }
        }
        map
    };
    let a = parse(ours);
    let b = parse(theirs);
    let mut diffs = Vec::new();
    for key in a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>() {
        match (a.get(key), b.get(key)) {
            (Some(x), Some(y)) if x == y => {}
            (x, y) => diffs.push(format!(
                "  {key}: current={} checkpoint={}",
                x.map_or("<absent>", |s| s.as_str()),
                y.map_or("<absent>", |s| s.as_str())
            )),
        }
    }
    diffs
}

/// Restores model parameters and optimizer moments from checkpoint data.
/// `expected_config` (when given) must agree with the embedded text key by
/// key, otherwise the load is rejected with the field-level diff.
pub fn restore(
    model: &mut Model,
    opt: &mut AdamState,
    data: &CheckpointData,
    expected_config: Option<&str>,
) -> Result<()> {
    if let Some(expected) = expected_config {
        let diffs = diff_config_texts(expected, &data.config_text);
        if !diffs.is_empty() {
            return Err(TrainError::ConfigMismatch { diffs });
        }
    }

    let mut missing: Vec<String> = Vec::new();
    model.visit_params_mut(&mut |name, params| {
        match data.tensors.get(name) {
            Some(values) if values.len() == params.len() => {
                params.copy_from_slice(values);
            }
            Some(values) => missing.push(format!(
                "{name}: length {} in file, {} in model",
                values.len(),
                params.len()
            )),
            None => missing.push(format!("{name}: absent from checkpoint")),
        }
    });
    if !missing.is_empty() {
        return Err(TrainError::TensorMismatch(missing.join("; ")));
    }

    opt.t = data.step;
    opt.moments.clear();
    model.visit_params(&mut |name, params| {
        let m = data.tensors.get(&format!("adam.m.{name}"));
        let v = data.tensors.get(&format!("adam.v.{name}"));
        if let (Some(m), Some(v)) = (m, v) {
            if m.len() == params.len() && v.len() == params.len() {
                opt.moments
                    .insert(name.to_string(), (m.clone(), v.clone()));
            }
        }
    });
    Ok(())
}
