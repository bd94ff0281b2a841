use std::fs;
use std::path::{Path, PathBuf};

use fundusnet::data::{
    load_unit_image, read_fold_file, resize_bilinear, stratified_kfold, write_fold_file,
    DatasetManifest, IngestLayout,
};
use fundusnet::explain::{crm_heatmap, save_confusion_png, save_heatmap_png};
use fundusnet::model::AblationMode;
use fundusnet::training::{
    cross_validate, evaluate, load_checkpoint, render_table, CrossValReport, TrainConfig,
};

use crate::provenance::RunRecord;
use crate::{CliError, CliResult};

/// Creates the output directory, refusing to write into a non-empty one
/// without --force.
fn prepare_out_dir(out: &Path, force: bool) -> CliResult<()> {
    if out.exists() {
        let non_empty = fs::read_dir(out)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", out.display())))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
    } else {
        fs::create_dir_all(out)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    }
    Ok(())
}

/// Precedence: defaults < config file < --set overrides.
fn resolve_config(config: Option<&Path>, overrides: &[String]) -> CliResult<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = config {
        if !path.is_file() {
            return Err(CliError::Usage(format!(
                "config file {} does not exist",
                path.display()
            )));
        }
        cfg.merge_file(path)?;
    }
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn load_folds(folds: &Path, name: Option<&str>) -> CliResult<(DatasetManifest, fundusnet::data::FoldSplit)> {
    if !folds.is_file() {
        return Err(CliError::Usage(format!(
            "fold file {} does not exist",
            folds.display()
        )));
    }
    let dataset_name = name
        .map(str::to_string)
        .or_else(|| folds.file_stem().map(|s| s.to_string_lossy().to_string()))
        .unwrap_or_else(|| "dataset".to_string());
    Ok(read_fold_file(folds, &dataset_name)?)
}

pub fn run_split(
    root: &Path,
    layout: &str,
    k: usize,
    seed: u64,
    name: Option<&str>,
    out: &Path,
    force: bool,
) -> CliResult<()> {
    let layout = IngestLayout::parse(layout)?;
    let dataset_name = name
        .map(str::to_string)
        .or_else(|| root.file_name().map(|s| s.to_string_lossy().to_string()))
        .unwrap_or_else(|| "dataset".to_string());
    let manifest = DatasetManifest::ingest(root, layout, &dataset_name)?;
    let split = stratified_kfold(&manifest, k, seed)?;
    prepare_out_dir(out, force)?;

    manifest.write(&out.join("manifest.csv"))?;
    write_fold_file(&out.join("folds.csv"), &manifest, &split)?;

    let (normal, glaucoma) = manifest.class_counts();
    RunRecord::new("split", 0, seed)
        .with_dataset(&dataset_name, manifest.len(), normal, glaucoma)
        .write(out)?;

    println!(
        "{}: {} images ({normal} normal, {glaucoma} glaucoma) -> {k} folds",
        dataset_name,
        manifest.len()
    );
    for (i, fold) in split.folds.iter().enumerate() {
        let g = fold
            .iter()
            .filter(|&&idx| manifest.entries[idx].label == 1)
            .count();
        println!("  fold {i}: {} images ({} normal, {g} glaucoma)", fold.len(), fold.len() - g);
    }
    Ok(())
}

fn report_rows(label: &str, report: &CrossValReport) -> (String, f64, f64, f64, f64) {
    (
        label.to_string(),
        report.mean_acc,
        report.mean_pre,
        report.mean_rec,
        report.mean_f1,
    )
}

pub fn run_train(
    folds: &Path,
    config: Option<&Path>,
    overrides: &[String],
    name: Option<&str>,
    out: &Path,
    force: bool,
) -> CliResult<()> {
    let cfg = resolve_config(config, overrides)?;
    let (manifest, split) = load_folds(folds, name)?;
    prepare_out_dir(out, force)?;
    cfg.write_file(&out.join("config.txt"))?;

    let report = cross_validate(&manifest, &split, &cfg, Some(out))?;

    let table = render_table(&[report_rows(
        cfg.ablation_mode()?.label(),
        &report,
    )]);
    fs::write(out.join("table.txt"), &table)
        .map_err(|e| CliError::Runtime(format!("cannot write table: {e}")))?;

    let best = report.best_fold;
    save_confusion_png(
        &report.per_fold[best].confusion,
        ('G', 'N'),
        &out.join(format!("{}_{best}_confusion.png", manifest.name)),
    )?;

    let (normal, glaucoma) = manifest.class_counts();
    RunRecord::new("train", cfg.hash(), cfg.seed)
        .with_dataset(&manifest.name, manifest.len(), normal, glaucoma)
        .write(out)?;

    print!("{table}");
    for (i, m) in report.per_fold.iter().enumerate() {
        println!(
            "fold {i}: acc {:.2}  pre {:.2}  rec {:.2}  f1 {:.2}",
            m.acc, m.pre, m.rec, m.f1
        );
    }
    println!("best fold: {best}");
    Ok(())
}

pub fn run_evaluate(
    checkpoint: &Path,
    folds: &Path,
    fold: usize,
    overrides: &[String],
    name: Option<&str>,
    out: &Path,
    force: bool,
) -> CliResult<()> {
    if !checkpoint.is_file() {
        return Err(CliError::Usage(format!(
            "checkpoint {} does not exist",
            checkpoint.display()
        )));
    }
    let (model, mut cfg) = load_checkpoint(checkpoint)?;
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    let (manifest, split) = load_folds(folds, name)?;
    if fold >= split.k {
        return Err(CliError::Usage(format!(
            "fold {fold} out of range; the fold file defines {} folds",
            split.k
        )));
    }
    prepare_out_dir(out, force)?;

    let report = evaluate(&model, &manifest, split.test_indices(fold), &cfg)?;
    let mut csv = String::from("fold,acc,pre,rec,f1\n");
    csv.push_str(&format!(
        "{fold},{:.4},{:.4},{:.4},{:.4}\n",
        report.acc, report.pre, report.rec, report.f1
    ));
    fs::write(out.join("evaluation.csv"), csv)
        .map_err(|e| CliError::Runtime(format!("cannot write evaluation.csv: {e}")))?;
    save_confusion_png(
        &report.confusion,
        ('G', 'N'),
        &out.join(format!("{}_{fold}_confusion.png", manifest.name)),
    )?;

    let (normal, glaucoma) = manifest.class_counts();
    RunRecord::new("evaluate", cfg.hash(), cfg.seed)
        .with_dataset(&manifest.name, manifest.len(), normal, glaucoma)
        .write(out)?;

    println!(
        "fold {fold}: acc {:.2}  pre {:.2}  rec {:.2}  f1 {:.2}",
        report.acc, report.pre, report.rec, report.f1
    );
    println!("confusion [[TN, FP], [FN, TP]] = {:?}", report.confusion.matrix());
    Ok(())
}

pub fn run_ablate(
    folds: &Path,
    config: Option<&Path>,
    overrides: &[String],
    backbones: bool,
    name: Option<&str>,
    out: &Path,
    force: bool,
) -> CliResult<()> {
    let base = resolve_config(config, overrides)?;
    let (manifest, split) = load_folds(folds, name)?;
    prepare_out_dir(out, force)?;

    let mut rows = Vec::new();
    let mut csv = String::from("configuration,acc,pre,rec,f1\n");
    for mode in AblationMode::ALL {
        let mut cfg = base.clone();
        cfg.set("variant", mode.name())?;
        let sub = out.join(format!("variant_{}", mode.name()));
        fs::create_dir_all(&sub)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", sub.display())))?;
        let report = cross_validate(&manifest, &split, &cfg, Some(&sub))?;
        csv.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4}\n",
            mode.label(),
            report.mean_acc,
            report.mean_pre,
            report.mean_rec,
            report.mean_f1
        ));
        rows.push(report_rows(mode.label(), &report));
    }
    let table = render_table(&rows);
    fs::write(out.join("ablation.csv"), &csv)
        .map_err(|e| CliError::Runtime(format!("cannot write ablation.csv: {e}")))?;
    fs::write(out.join("ablation_table.txt"), &table)
        .map_err(|e| CliError::Runtime(format!("cannot write table: {e}")))?;
    print!("{table}");

    if backbones {
        let mut rows = Vec::new();
        for backbone in ["mobilenetv2", "resnet50", "inceptionv3", "densenet121"] {
            let mut cfg = base.clone();
            cfg.set("backbone", backbone)?;
            cfg.set("variant", "baseline")?;
            cfg.validate()?;
            let sub = out.join(format!("backbone_{backbone}"));
            fs::create_dir_all(&sub)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", sub.display())))?;
            let report = cross_validate(&manifest, &split, &cfg, Some(&sub))?;
            rows.push(report_rows(backbone, &report));
        }
        let table = render_table(&rows);
        fs::write(out.join("backbone_table.txt"), &table)
            .map_err(|e| CliError::Runtime(format!("cannot write table: {e}")))?;
        print!("{table}");
    }

    let (normal, glaucoma) = manifest.class_counts();
    RunRecord::new("ablate", base.hash(), base.seed)
        .with_dataset(&manifest.name, manifest.len(), normal, glaucoma)
        .write(out)?;
    Ok(())
}

pub fn run_heatmap(
    checkpoint: &Path,
    images: &[PathBuf],
    out: &Path,
    force: bool,
) -> CliResult<()> {
    if !checkpoint.is_file() {
        return Err(CliError::Usage(format!(
            "checkpoint {} does not exist",
            checkpoint.display()
        )));
    }
    let (model, cfg) = load_checkpoint(checkpoint)?;
    let pre_cfg = cfg.preprocess_config()?;
    prepare_out_dir(out, force)?;

    let mut written = Vec::new();
    for path in images {
        let unit = match load_unit_image(path) {
            Ok((img, _)) => resize_bilinear(&img, 256, 256),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                continue;
            }
        };
        let heatmap = crm_heatmap(&model, &unit, &pre_cfg, None)?;
        if heatmap.degenerate {
            eprintln!(
                "warning: constant attention map for {}; heatmap zeroed",
                path.display()
            );
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "image".to_string());
        let target = out.join(format!("{stem}_crm_heatmap.png"));
        save_heatmap_png(&heatmap, &target)?;
        println!(
            "{} -> {} (p = {:.4})",
            path.display(),
            target.display(),
            heatmap.predicted_prob
        );
        written.push(target.display().to_string());
    }
    if written.is_empty() {
        return Err(CliError::Runtime(
            "no heatmaps were produced; every input failed to decode".to_string(),
        ));
    }
    let mut record = RunRecord::new("heatmap", cfg.hash(), cfg.seed);
    record.inputs = images.iter().map(|p| p.display().to_string()).collect();
    record.outputs = written;
    record.write(out)?;
    Ok(())
}
