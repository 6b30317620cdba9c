//! GSTW weight container: a flat little-endian file of named f32 tensors.
//!
//! Layout: magic `GSTW`, version `u16`, entry count `u32`; per entry a
//! `u16` name length plus UTF-8 name, a dtype tag byte (0 = f32), rank `u8`,
//! one `u32` per dimension, then the row-major payload. Names under the
//! reserved `meta/` prefix carry scalar metadata (coding period, base,
//! threshold, grouping) rather than model weights.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gemst_core::model::{Model, WeightContainer};

use crate::error::{Error, Result};
use crate::write_atomic;

pub const MAGIC: [u8; 4] = *b"GSTW";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 0;
pub const META_PREFIX: &str = "meta/";

fn bad(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::Weights(format!("{}: {what}", path.display()))
}

/// Serialize a container (weights plus any `meta/` entries) to bytes.
/// Entry order follows the map order, so identical containers serialize to
/// identical bytes.
pub fn to_bytes(container: &WeightContainer) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(container.entries.len() as u32).to_le_bytes());
    for (name, (dims, values)) in &container.entries {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(DTYPE_F32);
        out.push(dims.len() as u8);
        for d in dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parse container bytes; every structural defect is a distinct error.
pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<WeightContainer> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = pos.checked_add(n).filter(|e| *e <= bytes.len()).ok_or_else(|| {
            bad(path, format!("truncated at byte {pos} (needed {n} more)"))
        })?;
        let s = &bytes[pos..end];
        pos = end;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(bad(path, "not a GSTW file (bad magic)"));
    }
    let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(bad(path, format!("unsupported version {version}, expected {VERSION}")));
    }
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let mut entries = BTreeMap::new();
    for i in 0..count {
        let name_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(name_len)?)
            .map_err(|_| bad(path, format!("entry {i}: name is not UTF-8")))?
            .to_owned();
        let dtype = take(1)?[0];
        if dtype != DTYPE_F32 {
            return Err(bad(path, format!("entry '{name}': unknown dtype tag {dtype}")));
        }
        let rank = take(1)?[0] as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
        }
        let len: usize = dims.iter().product();
        let payload = take(len * 4)?;
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if entries.insert(name.clone(), (dims, values)).is_some() {
            return Err(bad(path, format!("duplicate entry '{name}'")));
        }
    }
    if pos != bytes.len() {
        return Err(bad(path, format!("{} trailing bytes after last entry", bytes.len() - pos)));
    }
    Ok(WeightContainer { entries })
}

pub fn save(path: &Path, container: &WeightContainer) -> Result<()> {
    write_atomic(path, &to_bytes(container))
}

pub fn load(path: &Path) -> Result<WeightContainer> {
    let bytes = fs::read(path)
        .map_err(|e| bad(path, format!("cannot read: {e}")))?;
    from_bytes(&bytes, path)
}

/// Split a loaded container into model weights and `meta/` entries.
pub fn split_meta(container: WeightContainer) -> (WeightContainer, BTreeMap<String, Vec<f32>>) {
    let mut weights = BTreeMap::new();
    let mut meta = BTreeMap::new();
    for (name, (dims, values)) in container.entries {
        if let Some(key) = name.strip_prefix(META_PREFIX) {
            meta.insert(key.to_owned(), values);
        } else {
            weights.insert(name, (dims, values));
        }
    }
    (WeightContainer { entries: weights }, meta)
}

/// Export a model's weights plus coding metadata derived from its config.
pub fn container_for(model: &Model) -> WeightContainer {
    let mut container = model.export_weights();
    let cfg = &model.config;
    let mut put = |key: &str, values: Vec<f32>| {
        let dims = vec![values.len()];
        container.entries.insert(format!("{META_PREFIX}{key}"), (dims, values));
    };
    put("t", vec![cfg.t as f32]);
    put("alpha", vec![cfg.alpha as f32]);
    put("lambda", vec![cfg.lambda as f32]);
    put(
        "gt_size",
        cfg.stages.iter().map(|s| s.gt_size as f32).collect(),
    );
    container
}

/// Load a weight file into a freshly built model, checking every entry.
pub fn load_into(path: &Path, model: &mut Model) -> Result<()> {
    let (weights, meta) = split_meta(load(path)?);
    for (key, expect) in [
        ("t", model.config.t as f32),
        ("alpha", model.config.alpha as f32),
        ("lambda", model.config.lambda as f32),
    ] {
        if let Some(v) = meta.get(key).and_then(|v| v.first()) {
            if *v != expect {
                return Err(bad(
                    path,
                    format!("meta/{key} is {v}, model config expects {expect}"),
                ));
            }
        }
    }
    model.load_weights(&weights).map_err(Into::into)
}
