use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetEntry, DatasetManifest};
use crate::error::{Error, Result};
use crate::nn::derive_seed;

/// Disjoint index partition of a manifest into k folds, stratified so each
/// fold's per-class counts are within one of perfect proportionality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, f) in self.folds.iter().enumerate() {
            if i != fold {
                out.extend_from_slice(f);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Shuffles each class independently with a seed-derived stream, then deals
/// contiguous chunks to folds. The fold that receives each class's remainder
/// rotates from class to class, which keeps total fold sizes as even as the
/// arithmetic allows.
pub fn stratified_kfold(m: &DatasetManifest, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::validation(format!("k must be >= 2, got {k}")));
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for label in [0u8, 1u8] {
        let mut idx: Vec<usize> = m
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < k {
            return Err(Error::validation(format!(
                "class {label} has {} members, fewer than k = {k}",
                idx.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[label as u64, k as u64]));
        idx.shuffle(&mut rng);
        let base = idx.len() / k;
        let rem = idx.len() % k;
        let mut pos = 0;
        for (f, fold) in folds.iter_mut().enumerate() {
            let extra = usize::from((f + k - cursor) % k < rem);
            let count = base + extra;
            fold.extend_from_slice(&idx[pos..pos + count]);
            pos += count;
        }
        cursor = (cursor + rem) % k;
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    Ok(FoldSplit { k, folds, seed })
}

/// `path,label,fold_index` rows in manifest order.
pub fn write_fold_file(path: &Path, m: &DatasetManifest, split: &FoldSplit) -> Result<()> {
    let mut fold_of = vec![0usize; m.len()];
    for (f, fold) in split.folds.iter().enumerate() {
        for &i in fold {
            fold_of[i] = f;
        }
    }
    let mut text = String::from("path,label,fold_index\n");
    for (i, entry) in m.entries.iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", entry.path.display(), entry.label, fold_of[i]));
    }
    let mut out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a fold file back into a manifest plus its split.
pub fn read_fold_file(path: &Path, name: &str) -> Result<(DatasetManifest, FoldSplit)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut entries = Vec::new();
    let mut fold_of = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line.trim() != "path,label,fold_index" {
                return Err(Error::validation(format!(
                    "{}: expected header 'path,label,fold_index', got '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut tail = line.rsplitn(3, ',');
        let fold: usize = tail
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad_line(path, lineno))?;
        let label: u8 = tail
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad_line(path, lineno))?;
        let p = tail.next().ok_or_else(|| bad_line(path, lineno))?;
        entries.push(DatasetEntry {
            path: p.into(),
            label,
        });
        fold_of.push(fold);
    }
    if entries.is_empty() {
        return Err(Error::validation(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    let k = fold_of.iter().copied().max().unwrap_or(0) + 1;
    let mut folds = vec![Vec::new(); k];
    for (i, &f) in fold_of.iter().enumerate() {
        folds[f].push(i);
    }
    Ok((
        DatasetManifest {
            name: name.to_string(),
            entries,
        },
        FoldSplit { k, folds, seed: 0 },
    ))
}

fn bad_line(path: &Path, lineno: usize) -> Error {
    Error::validation(format!(
        "{} line {}: expected 'path,label,fold_index'",
        path.display(),
        lineno + 1
    ))
}
