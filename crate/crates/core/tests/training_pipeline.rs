//! End-to-end training behavior at smoke scale: null steps, checkpointed
//! evaluation reproducibility, cross-validation artifacts and determinism.

use fundusnet::data::{generate_disc_dataset, stratified_kfold};
use fundusnet::model::build_model;
use fundusnet::training::{
    cross_validate, evaluate, load_checkpoint, train_fold, TrainConfig,
};
use std::fs;

fn smoke_config(epochs: usize) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    for (k, v) in [
        ("backbone", "stub"),
        ("stub_channels", "8"),
        ("sam_kernel_size", "3"),
        ("batch_size", "8"),
        ("k_folds", "2"),
        ("seed", "7"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg.set("epochs", &epochs.to_string()).unwrap();
    cfg
}

#[test]
fn zero_learning_rate_leaves_parameters_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(dir.path(), 8, 48, 1).unwrap();
    let mut cfg = smoke_config(1);
    cfg.set("learning_rate", "0").unwrap();

    let mut model =
        build_model(&cfg.backbone_spec().unwrap(), &cfg.attention_config(), cfg.seed).unwrap();
    let mut before = Vec::new();
    model.visit_params(&mut |_, p| before.push(p.data.clone()));

    let indices: Vec<usize> = (0..manifest.len()).collect();
    train_fold(&mut model, &manifest, &indices, &cfg, 0).unwrap();

    let mut i = 0;
    model.visit_params(&mut |name, p| {
        assert_eq!(p.data, before[i], "parameter {name} moved under lr = 0");
        i += 1;
    });
}

#[test]
fn training_reduces_loss_on_separable_discs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(dir.path(), 16, 48, 2).unwrap();
    let cfg = smoke_config(4);
    let mut model =
        build_model(&cfg.backbone_spec().unwrap(), &cfg.attention_config(), cfg.seed).unwrap();
    let indices: Vec<usize> = (0..manifest.len()).collect();
    let record = train_fold(&mut model, &manifest, &indices, &cfg, 0).unwrap();
    assert_eq!(record.epoch_losses.len(), 4);
    assert!(record.epoch_losses.iter().all(|l| l.is_finite()));
    assert!(record.epoch_losses.last().unwrap() < record.epoch_losses.first().unwrap());
    assert!(record.best_epoch < 4);
}

#[test]
fn checkpointed_model_reproduces_test_metrics_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(&dir.path().join("data"), 12, 48, 3).unwrap();
    let split = stratified_kfold(&manifest, 2, 7).unwrap();
    let cfg = smoke_config(2);

    let out = dir.path().join("run");
    let report = cross_validate(&manifest, &split, &cfg, Some(&out)).unwrap();
    assert_eq!(report.per_fold.len(), 2);

    // reload fold 0's final checkpoint and re-evaluate
    let (model, loaded_cfg) = load_checkpoint(&out.join("fold0_final.ckpt")).unwrap();
    let re = evaluate(&model, &manifest, split.test_indices(0), &loaded_cfg).unwrap();
    assert_eq!(re, report.per_fold[0]);
}

#[test]
fn cross_validation_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(&dir.path().join("data"), 12, 48, 4).unwrap();
    let split = stratified_kfold(&manifest, 2, 5).unwrap();
    let cfg = smoke_config(2);

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let rep_a = cross_validate(&manifest, &split, &cfg, Some(&out_a)).unwrap();
    let rep_b = cross_validate(&manifest, &split, &cfg, Some(&out_b)).unwrap();
    assert_eq!(rep_a, rep_b);

    for name in [
        "metrics.csv",
        "fold0_loss.csv",
        "fold1_loss.csv",
        "fold0_best.ckpt",
        "fold0_final.ckpt",
        "fold1_best.ckpt",
        "fold1_final.ckpt",
    ] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }

    let csv = fs::read_to_string(out_a.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("fold,acc,pre,rec,f1\n"));
    assert_eq!(csv.lines().count(), 1 + 2 + 1);
}

#[test]
fn empty_evaluation_set_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(dir.path(), 8, 48, 6).unwrap();
    let cfg = smoke_config(1);
    let model =
        build_model(&cfg.backbone_spec().unwrap(), &cfg.attention_config(), cfg.seed).unwrap();
    assert!(evaluate(&model, &manifest, &[], &cfg).is_err());
}
