use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::ArrayD;

use crate::error::{Error, Result};
use crate::model::{build_model, AblationMode, ClassifierModel};
use crate::tensorio;
use crate::training::config::{fnv1a, TrainConfig};

/// Container layout: magic+version, config hash, ablation mode, embedded
/// canonical config text, then every parameter and batch-norm statistic as
/// named tensors.
const MAGIC: &[u8; 8] = b"FNCKPT01";

pub fn save_checkpoint(
    model: &mut ClassifierModel,
    cfg: &TrainConfig,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let fail = |e: std::io::Error| Error::Checkpoint(format!("write failed: {e}"));

    w.write_all(MAGIC).map_err(fail)?;
    let config_text = cfg.canonical_string();
    w.write_all(&fnv1a(config_text.as_bytes()).to_le_bytes())
        .map_err(fail)?;
    w.write_all(&[mode_byte(model.mode)]).map_err(fail)?;
    w.write_all(&(config_text.len() as u32).to_le_bytes())
        .map_err(fail)?;
    w.write_all(config_text.as_bytes()).map_err(fail)?;

    let mut tensors: Vec<(String, ArrayD<f64>)> = Vec::new();
    model.visit_params(&mut |name, p| tensors.push((name.to_string(), p.data.clone())));
    model.visit_state(&mut |name, s| tensors.push((format!("state.{name}"), s.clone())));
    let refs: Vec<(String, &ArrayD<f64>)> = tensors.iter().map(|(n, t)| (n.clone(), t)).collect();
    tensorio::write_tensors(&mut w, &refs)?;
    w.flush().map_err(fail)
}

/// Restores a model bit-exactly: every parameter, every batch-norm running
/// statistic, and the config (returned alongside). The embedded config hash
/// must match the embedded text.
pub fn load_checkpoint(path: &Path) -> Result<(ClassifierModel, TrainConfig)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    tensorio::read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{}: bad magic or unsupported format version (expected {})",
            path.display(),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    let stored_hash = tensorio::read_u64(&mut r)?;
    let mut mode = [0u8; 1];
    tensorio::read_exact(&mut r, &mut mode)?;
    let mode = mode_from_byte(mode[0])?;
    let text_len = tensorio::read_u32(&mut r)? as usize;
    if text_len > 1 << 20 {
        return Err(Error::Checkpoint("implausible config length".into()));
    }
    let mut text = vec![0u8; text_len];
    tensorio::read_exact(&mut r, &mut text)?;
    if fnv1a(&text) != stored_hash {
        return Err(Error::Checkpoint(format!(
            "{}: config hash mismatch (corrupt or tampered file)",
            path.display()
        )));
    }
    let text = String::from_utf8(text)
        .map_err(|_| Error::Checkpoint("embedded config is not utf-8".into()))?;
    let mut cfg = TrainConfig::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("embedded config line {lineno} malformed")))?;
        cfg.set(k, v)
            .map_err(|e| Error::Checkpoint(format!("embedded config: {e}")))?;
    }

    // weights come from the file; never consult the pretrained cache here
    let mut spec = cfg.backbone_spec().map_err(|e| Error::Checkpoint(e.to_string()))?;
    spec.pretrained = false;
    let mut model = build_model(&spec, &cfg.attention_config(), cfg.seed)
        .map_err(|e| Error::Checkpoint(format!("cannot rebuild model: {e}")))?;
    model.mode = mode;

    let tensors = tensorio::read_tensors(&mut r)?;
    let mut remaining = [0u8; 1];
    if r.read(&mut remaining).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
        return Err(Error::Checkpoint(format!(
            "{}: trailing bytes after tensor table",
            path.display()
        )));
    }
    let map: std::collections::HashMap<String, ArrayD<f64>> = tensors.into_iter().collect();
    let mut missing: Vec<String> = Vec::new();
    let mut used = 0usize;
    model.visit_params(&mut |name, p| match map.get(name) {
        Some(t) if t.shape() == p.data.shape() => {
            p.data.assign(t);
            used += 1;
        }
        _ => missing.push(name.to_string()),
    });
    model.visit_state(&mut |name, s| {
        let key = format!("state.{name}");
        match map.get(&key) {
            Some(t) if t.shape() == s.shape() => {
                s.assign(t);
                used += 1;
            }
            _ => missing.push(key),
        }
    });
    if !missing.is_empty() {
        return Err(Error::Checkpoint(format!(
            "{}: missing or mis-shaped tensors: {}",
            path.display(),
            missing.join(", ")
        )));
    }
    if used != map.len() {
        return Err(Error::Checkpoint(format!(
            "{}: file carries {} tensors the model does not expect",
            path.display(),
            map.len() - used
        )));
    }
    Ok((model, cfg))
}

fn mode_byte(mode: AblationMode) -> u8 {
    match mode {
        AblationMode::Baseline => 0,
        AblationMode::CbamOnly => 1,
        AblationMode::CrmOnly => 2,
        AblationMode::Both => 3,
    }
}

fn mode_from_byte(b: u8) -> Result<AblationMode> {
    match b {
        0 => Ok(AblationMode::Baseline),
        1 => Ok(AblationMode::CbamOnly),
        2 => Ok(AblationMode::CrmOnly),
        3 => Ok(AblationMode::Both),
        other => Err(Error::Checkpoint(format!("unknown ablation mode byte {other}"))),
    }
}
