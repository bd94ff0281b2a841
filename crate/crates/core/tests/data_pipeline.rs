//! Ingestion, fold files and preprocessing against real files on disk.

use fundusnet::data::{
    generate_disc_dataset, preprocess_file, read_fold_file, resized_unit_file, stratified_kfold,
    write_fold_file, DatasetManifest, IngestLayout, PreprocessConfig,
};
use fundusnet::Error;
use image::{Rgb, RgbImage};
use std::fs;

fn write_png(path: &std::path::Path, w: u32, h: u32, value: u8) {
    RgbImage::from_pixel(w, h, Rgb([value, value, value]))
        .save(path)
        .unwrap();
}

#[test]
fn class_folders_ingest_counts_and_sorting() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("normal")).unwrap();
    fs::create_dir(dir.path().join("glaucoma")).unwrap();
    write_png(&dir.path().join("normal/b.png"), 8, 8, 10);
    write_png(&dir.path().join("normal/a.png"), 8, 8, 20);
    write_png(&dir.path().join("glaucoma/z.png"), 8, 8, 30);
    write_png(&dir.path().join("glaucoma/x.png"), 8, 8, 40);
    write_png(&dir.path().join("glaucoma/y.png"), 8, 8, 50);

    let m = DatasetManifest::ingest(dir.path(), IngestLayout::ClassFolders, "tiny").unwrap();
    assert_eq!(m.len(), 5);
    assert_eq!(m.class_counts(), (2, 3));
    let mut sorted = m.entries.clone();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    assert_eq!(m.entries, sorted);
}

#[test]
fn acrima_filename_layout_labels_by_marker() {
    let dir = tempfile::tempdir().unwrap();
    write_png(&dir.path().join("Im001_g_ACRIMA.png"), 8, 8, 10);
    write_png(&dir.path().join("Im002_ACRIMA.png"), 8, 8, 20);
    write_png(&dir.path().join("Im003_g_ACRIMA.png"), 8, 8, 30);
    let m = DatasetManifest::ingest(dir.path(), IngestLayout::AcrimaFilename, "acrima").unwrap();
    assert_eq!(m.len(), 3);
    assert_eq!(m.class_counts(), (1, 2));
}

#[test]
fn unreadable_image_aborts_with_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("normal")).unwrap();
    fs::create_dir(dir.path().join("glaucoma")).unwrap();
    write_png(&dir.path().join("normal/ok.png"), 8, 8, 10);
    write_png(&dir.path().join("glaucoma/ok.png"), 8, 8, 10);
    fs::write(dir.path().join("glaucoma/broken.png"), b"not an image").unwrap();

    let err = DatasetManifest::ingest(dir.path(), IngestLayout::ClassFolders, "x").unwrap_err();
    match err {
        Error::Ingest { report, .. } => {
            assert_eq!(report.len(), 1);
            assert!(report[0].contains("broken.png"));
        }
        other => panic!("expected ingest error, got {other}"),
    }
}

#[test]
fn missing_class_folder_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("normal")).unwrap();
    write_png(&dir.path().join("normal/ok.png"), 8, 8, 10);
    let err = DatasetManifest::ingest(dir.path(), IngestLayout::ClassFolders, "x").unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn manifest_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_disc_dataset(&dir.path().join("data"), 8, 32, 5).unwrap();
    let path = dir.path().join("manifest.csv");
    m.write(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("path,label\n"));
    assert!(!text.contains('\r'));
    let back = DatasetManifest::read(&path, &m.name).unwrap();
    assert_eq!(back.entries, m.entries);
}

#[test]
fn fold_file_roundtrip_preserves_partition() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_disc_dataset(&dir.path().join("data"), 12, 32, 6).unwrap();
    let split = stratified_kfold(&m, 3, 9).unwrap();
    let path = dir.path().join("folds.csv");
    write_fold_file(&path, &m, &split).unwrap();

    let (m2, split2) = read_fold_file(&path, "roundtrip").unwrap();
    assert_eq!(m2.len(), m.len());
    assert_eq!(split2.k, 3);
    for f in 0..3 {
        let mut a = split.folds[f].clone();
        let mut b = split2.folds[f].clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}

#[test]
fn ingest_is_order_independent_via_sorting() {
    // two directories populated in different creation orders produce the
    // same manifest bytes
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for (dir, order) in [(&d1, [0, 1, 2]), (&d2, [2, 0, 1])] {
        fs::create_dir(dir.path().join("normal")).unwrap();
        fs::create_dir(dir.path().join("glaucoma")).unwrap();
        for i in order {
            write_png(&dir.path().join(format!("normal/{i}.png")), 8, 8, 10);
            write_png(&dir.path().join(format!("glaucoma/{i}.png")), 8, 8, 10);
        }
    }
    let m1 = DatasetManifest::ingest(d1.path(), IngestLayout::ClassFolders, "a").unwrap();
    let m2 = DatasetManifest::ingest(d2.path(), IngestLayout::ClassFolders, "a").unwrap();
    let rel = |m: &DatasetManifest, root: &std::path::Path| -> Vec<(String, u8)> {
        m.entries
            .iter()
            .map(|e| {
                (
                    e.path.strip_prefix(root).unwrap().display().to_string(),
                    e.label,
                )
            })
            .collect()
    };
    assert_eq!(rel(&m1, d1.path()), rel(&m2, d2.path()));
}

#[test]
fn preprocess_file_handles_grayscale_and_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let gray = image::GrayImage::from_pixel(100, 60, image::Luma([128]));
    let gray_path = dir.path().join("gray.png");
    gray.save(&gray_path).unwrap();
    let cfg = PreprocessConfig::default();
    let out = preprocess_file(&gray_path, &cfg).unwrap();
    assert_eq!(out.dim(), (256, 256, 3));
    for &v in out.iter() {
        assert!((v - 128.0 / 255.0).abs() < 1e-9);
    }

    let rgb_path = dir.path().join("rgb.png");
    write_png(&rgb_path, 178, 178, 60);
    let out = resized_unit_file(&rgb_path).unwrap();
    assert_eq!(out.dim(), (256, 256, 3));
}

#[test]
fn synthetic_dataset_is_deterministic_and_balanced() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let m1 = generate_disc_dataset(d1.path(), 10, 48, 33).unwrap();
    let m2 = generate_disc_dataset(d2.path(), 10, 48, 33).unwrap();
    assert_eq!(m1.class_counts(), (5, 5));
    for (a, b) in m1.entries.iter().zip(m2.entries.iter()) {
        assert_eq!(fs::read(&a.path).unwrap(), fs::read(&b.path).unwrap());
    }
}
