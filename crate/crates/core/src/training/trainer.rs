use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array3, Array4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{
    augment, augment_rng, normalize, preprocess, resized_unit_file, DatasetManifest, FoldSplit,
};
use crate::error::{Error, Result};
use crate::model::{build_model, ClassifierModel};
use crate::nn::derive_seed;
use crate::training::checkpoint::save_checkpoint;
use crate::training::config::TrainConfig;
use crate::training::loss::{bce_grad, bce_loss};
use crate::training::metrics::{
    metrics_from_confusion, Confusion, CrossValReport, MetricsReport,
};
use crate::training::optimizer::Adam;

/// Outcome of one fold's training run.
pub struct TrainRecord {
    pub epoch_losses: Vec<f64>,
    /// Fraction of training samples classified correctly per epoch, measured
    /// on the training-mode forward passes.
    pub epoch_accuracies: Vec<f64>,
    /// Epoch with the lowest training loss.
    pub best_epoch: usize,
    /// Snapshot of the model at `best_epoch`.
    pub best_model: ClassifierModel,
}

/// Trains `model` in place on the selected manifest entries. Deterministic
/// given the config seed: shuffling and augmentation streams derive from
/// (seed, fold, epoch, item).
pub fn train_fold(
    model: &mut ClassifierModel,
    manifest: &DatasetManifest,
    train_indices: &[usize],
    cfg: &TrainConfig,
    fold: usize,
) -> Result<TrainRecord> {
    if train_indices.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let pre_cfg = cfg.preprocess_config()?;
    let mut images: Vec<Array3<f64>> = Vec::with_capacity(train_indices.len());
    let mut labels: Vec<f64> = Vec::with_capacity(train_indices.len());
    for &i in train_indices {
        images.push(resized_unit_file(&manifest.entries[i].path)?);
        labels.push(manifest.entries[i].label as f64);
    }

    let mut optimizer = Adam::from_config(cfg);
    let fold_seed = derive_seed(cfg.seed, &[0x666f6c64, fold as u64]);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut epoch_accuracies = Vec::with_capacity(cfg.epochs);
    let mut best_epoch = 0usize;
    let mut best_loss = f64::INFINITY;
    let mut best_model = model.clone();

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..images.len()).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(fold_seed, &[0x73687566, epoch as u64]));
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_index, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch = Array4::<f64>::zeros((chunk.len(), 256, 256, 3));
            let mut batch_labels = Array1::<f64>::zeros(chunk.len());
            for (row, &item) in chunk.iter().enumerate() {
                let mut rng = augment_rng(fold_seed, epoch, train_indices[item]);
                let augmented = augment(&images[item], &pre_cfg.augment, &mut rng);
                let ready = normalize(augmented, pre_cfg.normalization);
                batch
                    .index_axis_mut(ndarray::Axis(0), row)
                    .assign(&ready);
                batch_labels[row] = labels[item];
            }
            let (probs, cache) = model.train_forward(&batch)?;
            let loss = bce_loss(&probs, &batch_labels)?;
            if !loss.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch_index,
                    learning_rate: cfg.learning_rate,
                });
            }
            loss_sum += loss * chunk.len() as f64;
            for (&p, &y) in probs.iter().zip(batch_labels.iter()) {
                if (p >= 0.5) == (y == 1.0) {
                    correct += 1;
                }
            }
            let grad = bce_grad(&probs, &batch_labels);
            model.zero_grads();
            model.backward(&cache, &grad);
            optimizer.step(model);
        }
        let epoch_loss = loss_sum / images.len() as f64;
        epoch_losses.push(epoch_loss);
        epoch_accuracies.push(correct as f64 / images.len() as f64);
        if epoch_loss < best_loss {
            best_loss = epoch_loss;
            best_epoch = epoch;
            best_model = model.clone();
        }
    }

    Ok(TrainRecord {
        epoch_losses,
        epoch_accuracies,
        best_epoch,
        best_model,
    })
}

/// Scores the selected manifest entries with the frozen model at threshold
/// 0.5 and derives the metric report under the configured averaging.
pub fn evaluate(
    model: &ClassifierModel,
    manifest: &DatasetManifest,
    indices: &[usize],
    cfg: &TrainConfig,
) -> Result<MetricsReport> {
    if indices.is_empty() {
        return Err(Error::validation("evaluation set is empty"));
    }
    let pre_cfg = cfg.preprocess_config()?;
    let mut probs = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(cfg.batch_size) {
        let mut batch = Array4::<f64>::zeros((chunk.len(), 256, 256, 3));
        for (row, &i) in chunk.iter().enumerate() {
            let (img, _) = crate::data::load_unit_image(&manifest.entries[i].path)?;
            batch
                .index_axis_mut(ndarray::Axis(0), row)
                .assign(&preprocess(&img, &pre_cfg));
        }
        let p = model.forward(&batch, false)?;
        probs.extend(p.iter().copied());
        labels.extend(chunk.iter().map(|&i| manifest.entries[i].label));
    }
    let confusion = Confusion::from_predictions(&probs, &labels);
    Ok(metrics_from_confusion(&confusion, cfg.metrics_averaging))
}

/// Runs the full k-fold protocol: per fold, a fresh model from the same seed
/// is trained on the k-1 training folds and scored on the held-out fold.
/// Artifacts (loss curves, checkpoints, reports) land in `out_dir` when
/// given.
pub fn cross_validate(
    manifest: &DatasetManifest,
    split: &FoldSplit,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<CrossValReport> {
    let mut per_fold = Vec::with_capacity(split.k);
    for fold in 0..split.k {
        let test_idx = split.test_indices(fold);
        let train_idx = split.train_indices(fold);
        assert_fold_isolation(&train_idx, test_idx, manifest)?;

        let mut model = build_model(&cfg.backbone_spec()?, &cfg.attention_config(), cfg.seed)?;
        model.mode = cfg.ablation_mode()?;
        let record = train_fold(&mut model, manifest, &train_idx, cfg, fold)?;
        let report = evaluate(&model, manifest, test_idx, cfg)?;

        if let Some(dir) = out_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let mut curve = String::from("epoch,loss\n");
            for (e, l) in record.epoch_losses.iter().enumerate() {
                curve.push_str(&format!("{e},{l:.12}\n"));
            }
            let curve_path = dir.join(format!("fold{fold}_loss.csv"));
            fs::write(&curve_path, curve).map_err(|e| Error::io(curve_path.clone(), e))?;

            let mut best = record.best_model;
            save_checkpoint(&mut best, cfg, &dir.join(format!("fold{fold}_best.ckpt")))?;
            save_checkpoint(&mut model, cfg, &dir.join(format!("fold{fold}_final.ckpt")))?;
        }
        per_fold.push(report);
    }
    let report = CrossValReport::aggregate(per_fold);
    if let Some(dir) = out_dir {
        let csv_path = dir.join("metrics.csv");
        fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(csv_path.clone(), e))?;
    }
    Ok(report)
}

/// No test-fold path may appear in the matching training stream.
fn assert_fold_isolation(
    train_idx: &[usize],
    test_idx: &[usize],
    manifest: &DatasetManifest,
) -> Result<()> {
    let train_paths: HashSet<&Path> = train_idx
        .iter()
        .map(|&i| manifest.entries[i].path.as_path())
        .collect();
    for &i in test_idx {
        if train_paths.contains(manifest.entries[i].path.as_path()) {
            return Err(Error::validation(format!(
                "fold leakage: {} appears in both train and test sets",
                manifest.entries[i].path.display()
            )));
        }
    }
    Ok(())
}
