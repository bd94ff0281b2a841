//! Acceptance suite. Each test covers one numbered criterion, prints a
//! PASS line with its runtime, and enforces the stated budget. Full-scale
//! reproduction on the real datasets is a documented command in the README,
//! not asserted here.

mod common;

use std::time::Instant;

use common::{
    check_operator, max_abs_diff, oracle_cam, oracle_composite, oracle_crm_forward,
    oracle_crm_gate, oracle_edge, oracle_sam, oracle_stats, random_map, small_sam_params,
};
use fundusnet::attention::{
    build_composite, cam_backward, cam_forward, cam_forward_train, channel_stats, crm_forward,
    crm_forward_train, crm_backward, crm_gate, edge_map, sam_backward, sam_forward,
    sam_forward_train,
};
use fundusnet::data::{
    generate_disc_dataset, stratified_kfold, DatasetEntry, DatasetManifest,
};
use fundusnet::model::build_model;
use fundusnet::training::{
    cross_validate, metrics_from_confusion, train_fold, Confusion, MetricsAveraging, TrainConfig,
};
use fundusnet::FeatureMap;
use ndarray::Array4;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOLERANCE: f64 = 1e-6;

fn pass(criterion: u32, label: &str, started: Instant, budget_s: u64) {
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE {criterion} ({label}): PASS in {:.2}s (budget {budget_s}s)",
        elapsed.as_secs_f64()
    );
    assert!(
        elapsed.as_secs() < budget_s,
        "criterion {criterion} exceeded its {budget_s}s budget"
    );
}

fn synthetic_labels_manifest(normal: usize, glaucoma: usize) -> DatasetManifest {
    let mut entries = Vec::new();
    for i in 0..normal {
        entries.push(DatasetEntry {
            path: format!("n{i}.png").into(),
            label: 0,
        });
    }
    for i in 0..glaucoma {
        entries.push(DatasetEntry {
            path: format!("g{i}.png").into(),
            label: 1,
        });
    }
    DatasetManifest {
        name: "labels-only".into(),
        entries,
    }
}

fn smoke_config() -> TrainConfig {
    let mut cfg = TrainConfig::default();
    for (k, v) in [
        ("backbone", "stub"),
        ("stub_channels", "16"),
        ("sam_kernel_size", "3"),
        ("epochs", "10"),
        ("k_folds", "2"),
        ("seed", "42"),
        ("batch_size", "8"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

#[test]
fn criterion_1_attention_math_oracle_suite() {
    let started = Instant::now();
    let fixtures = 24;
    for case in 0..fixtures {
        let seed = 1000 + case as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rng.random_range(1..=3usize);
        let h = rng.random_range(1..=8usize);
        let w = rng.random_range(1..=8usize);
        let c = rng.random_range(1..=24usize);
        let f = random_map((b, h, w, c), seed ^ 0xaa);
        let fm = FeatureMap::new(f.clone()).unwrap();
        let p = small_sam_params(c, seed ^ 0xbb);

        let out = cam_forward(&fm, &p).unwrap();
        assert!(max_abs_diff(out.data(), &oracle_cam(&f, &p)) < ORACLE_TOLERANCE);

        let out = sam_forward(&fm, &p).unwrap();
        assert!(max_abs_diff(out.data(), &oracle_sam(&f, &p)) < ORACLE_TOLERANCE);

        let out = edge_map(&fm);
        assert!(max_abs_diff(out.data(), &oracle_edge(&f)) < ORACLE_TOLERANCE);

        let stats = channel_stats(&fm);
        let (mean, std) = oracle_stats(&f);
        for (a, b) in stats.mean.iter().zip(mean.iter()) {
            assert!((a - b).abs() < ORACLE_TOLERANCE);
        }
        for (a, b) in stats.std.iter().zip(std.iter()) {
            assert!((a - b).abs() < ORACLE_TOLERANCE);
        }

        let edge = edge_map(&fm);
        let stats_e = channel_stats(&edge);
        let t = build_composite(&stats, &stats_e).unwrap();
        let (me, se) = oracle_stats(edge.data());
        let t_oracle = oracle_composite(&mean, &std, &me, &se);
        for (a, b) in t.data.iter().zip(t_oracle.iter()) {
            assert!((a - b).abs() < ORACLE_TOLERANCE);
        }

        for training in [false, true] {
            let gate = crm_gate(&t, &p, training).unwrap();
            let gate_oracle = oracle_crm_gate(&t.data, &p, training);
            for (a, b) in gate.weights.iter().zip(gate_oracle.iter()) {
                assert!((a - b).abs() < ORACLE_TOLERANCE);
            }

            let out = crm_forward(&fm, &p, training).unwrap();
            assert!(
                max_abs_diff(out.data(), &oracle_crm_forward(&f, &p, training))
                    < ORACLE_TOLERANCE
            );
        }
    }
    pass(1, "attention-math oracle suite", started, 30);
}

#[test]
fn criterion_2_gradient_checks() {
    let started = Instant::now();
    for seed in [11u64, 29, 47] {
        let p = small_sam_params(4, seed);
        let f = random_map((2, 6, 6, 4), seed ^ 0xcc);
        check_operator(
            "cam",
            &p,
            &f,
            ".cam.",
            &|x, q| {
                cam_forward(&FeatureMap::new(x.clone()).unwrap(), q)
                    .unwrap()
                    .data()
                    .sum()
            },
            &|x, q| {
                let (_, cache) =
                    cam_forward_train(&FeatureMap::new(x.clone()).unwrap(), q).unwrap();
                cam_backward(&cache, &Array4::ones(x.dim()), q)
            },
        );
        check_operator(
            "sam",
            &p,
            &f,
            ".sam.",
            &|x, q| {
                sam_forward(&FeatureMap::new(x.clone()).unwrap(), q)
                    .unwrap()
                    .data()
                    .sum()
            },
            &|x, q| {
                let (_, cache) =
                    sam_forward_train(&FeatureMap::new(x.clone()).unwrap(), q).unwrap();
                sam_backward(&cache, &Array4::ones(x.dim()), q)
            },
        );
        check_operator(
            "crm",
            &p,
            &f,
            ".crm.",
            &|x, q| {
                crm_forward(&FeatureMap::new(x.clone()).unwrap(), q, true)
                    .unwrap()
                    .data()
                    .sum()
            },
            &|x, q| {
                let (_, cache) =
                    crm_forward_train(&FeatureMap::new(x.clone()).unwrap(), q).unwrap();
                crm_backward(&cache, &Array4::ones(x.dim()), q)
            },
        );
    }
    pass(2, "gradient checks", started, 120);
}

#[test]
fn criterion_3_invariant_suite() {
    let started = Instant::now();

    // 1000 randomized operator cases
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + case);
        let b = rng.random_range(1..=4usize);
        let h = rng.random_range(1..=16usize);
        let w = rng.random_range(1..=16usize);
        let c = rng.random_range(1..=64usize);
        let f = random_map((b, h, w, c), case ^ 0xdd);
        let fm = FeatureMap::new(f.clone()).unwrap();
        let p = small_sam_params(c, case ^ 0xee);
        let training = case % 2 == 0;

        let cam = cam_forward(&fm, &p).unwrap();
        let sam = sam_forward(&fm, &p).unwrap();
        let crm = crm_forward(&fm, &p, training).unwrap();
        let edge = edge_map(&fm);
        for (name, out) in [("cam", &cam), ("sam", &sam), ("crm", &crm), ("edge", &edge)] {
            assert_eq!(out.dim(), fm.dim(), "{name} changed shape on case {case}");
        }
        for out in [&cam, &sam, &crm] {
            for (o, x) in out.data().iter().zip(f.iter()) {
                if *x != 0.0 {
                    assert!(o.abs() < x.abs(), "attenuation violated on case {case}");
                } else {
                    assert_eq!(*o, 0.0, "zero entry not preserved on case {case}");
                }
            }
        }

        // gating bounds straight from the gate
        let stats = channel_stats(&fm);
        let stats_e = channel_stats(&edge);
        let t = build_composite(&stats, &stats_e).unwrap();
        let gate = crm_gate(&t, &p, training).unwrap();
        assert!(gate.weights.iter().all(|&v| v > 0.0 && v < 1.0));

        // zero preservation of the full maps
        if case % 20 == 0 {
            let zeros = FeatureMap::new(Array4::zeros((b, h, w, c))).unwrap();
            assert!(cam_forward(&zeros, &p).unwrap().data().iter().all(|&v| v == 0.0));
            assert!(sam_forward(&zeros, &p).unwrap().data().iter().all(|&v| v == 0.0));
            assert!(crm_forward(&zeros, &p, training).unwrap().data().iter().all(|&v| v == 0.0));
            assert!(edge_map(&zeros).data().iter().all(|&v| v == 0.0));
        }

        // channel-permutation equivariance of the depthwise operators
        if c > 1 {
            let shift = 1 + (case as usize % (c - 1).max(1));
            let permuted = Array4::from_shape_fn((b, h, w, c), |(bi, i, j, ch)| {
                f[[bi, i, j, (ch + shift) % c]]
            });
            let edge_perm = edge_map(&FeatureMap::new(permuted.clone()).unwrap());
            for bi in 0..b {
                for i in 0..h {
                    for j in 0..w {
                        for ch in 0..c {
                            assert_eq!(
                                edge_perm.data()[[bi, i, j, ch]],
                                edge.data()[[bi, i, j, (ch + shift) % c]]
                            );
                        }
                    }
                }
            }
            let stats_perm = channel_stats(&FeatureMap::new(permuted).unwrap());
            for bi in 0..b {
                for ch in 0..c {
                    assert_eq!(stats_perm.mean[[bi, ch]], stats.mean[[bi, (ch + shift) % c]]);
                    assert_eq!(stats_perm.std[[bi, ch]], stats.std[[bi, (ch + shift) % c]]);
                }
            }
        }
    }

    // 1000 randomized fold cases
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + case);
        let k = rng.random_range(2..=8usize);
        let normal = rng.random_range(k..200usize.max(k + 1));
        let glaucoma = rng.random_range(k..200usize.max(k + 1));
        let m = synthetic_labels_manifest(normal, glaucoma);
        let split = stratified_kfold(&m, k, case).unwrap();

        let mut seen = vec![false; m.len()];
        for fold in &split.folds {
            for &i in fold {
                assert!(!seen[i], "overlapping folds on case {case}");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "missing index on case {case}");
        for fold in &split.folds {
            let g = fold.iter().filter(|&&i| m.entries[i].label == 1).count();
            let n = fold.len() - g;
            assert!(n >= normal / k && n <= normal / k + usize::from(normal % k != 0));
            assert!(g >= glaucoma / k && g <= glaucoma / k + usize::from(glaucoma % k != 0));
        }
    }

    pass(3, "invariant suite (2000 randomized cases)", started, 120);
}

#[test]
fn criterion_4_synthetic_end_to_end_smoke() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(dir.path(), 64, 96, 42).unwrap();
    assert_eq!(manifest.len(), 64);

    let cfg = smoke_config();
    let mut model =
        build_model(&cfg.backbone_spec().unwrap(), &cfg.attention_config(), cfg.seed).unwrap();
    let indices: Vec<usize> = (0..manifest.len()).collect();
    let record = train_fold(&mut model, &manifest, &indices, &cfg, 0).unwrap();

    assert_eq!(record.epoch_losses.len(), 10);
    for e in 1..5 {
        assert!(
            record.epoch_losses[e] < record.epoch_losses[e - 1],
            "loss did not strictly decrease at epoch {e}: {:?}",
            &record.epoch_losses[..5]
        );
    }

    let final_acc = *record.epoch_accuracies.last().unwrap() * 100.0;
    assert!(
        final_acc >= 90.0,
        "training accuracy {final_acc:.2}% below 90% (losses: {:?})",
        record.epoch_losses
    );
    pass(4, "synthetic end-to-end smoke", started, 600);
}

#[test]
fn criterion_5_protocol_fidelity_on_rim_one_counts() {
    let started = Instant::now();
    let m = synthetic_labels_manifest(313, 172);
    for seed in [0u64, 7, 42, 1234] {
        let split = stratified_kfold(&m, 5, seed).unwrap();
        for fold in &split.folds {
            assert_eq!(fold.len(), 97);
            let g = fold.iter().filter(|&&i| m.entries[i].label == 1).count();
            let n = fold.len() - g;
            assert!(n == 62 || n == 63, "normal per fold = {n}");
            assert!(g == 34 || g == 35, "glaucoma per fold = {g}");
        }
    }
    pass(5, "protocol fidelity (313/172 into 5 folds of 97)", started, 30);
}

#[test]
fn criterion_6_metric_oracle() {
    let started = Instant::now();
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + case);
        let n = rng.random_range(1..400usize);
        let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0001..0.9999)).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.35))).collect();

        let c = Confusion::from_predictions(&probs, &labels);
        // brute-force recount straight from the pairs
        let (mut tn, mut fp, mut fn_, mut tp) = (0usize, 0usize, 0usize, 0usize);
        for (&p, &y) in probs.iter().zip(labels.iter()) {
            match (y == 1, p >= 0.5) {
                (false, false) => tn += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (true, true) => tp += 1,
            }
        }
        assert_eq!(c.matrix(), [[tn, fp], [fn_, tp]]);
        assert_eq!(c.total(), n);

        let m = metrics_from_confusion(&c, MetricsAveraging::Macro);
        let expected = 100.0 * (tn + tp) as f64 / n as f64;
        assert!((m.acc - expected).abs() < 1e-9);
    }

    let worked = Confusion::from_counts(40, 10, 5, 45);
    for avg in [MetricsAveraging::Macro, MetricsAveraging::PositiveClass] {
        let m = metrics_from_confusion(&worked, avg);
        assert!((m.acc - 85.0).abs() < 1e-12);
    }
    pass(6, "metric oracle (1000 random sets + worked example)", started, 30);
}

#[test]
fn criterion_7_full_run_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_disc_dataset(&dir.path().join("data"), 64, 96, 42).unwrap();
    let cfg = smoke_config();
    let split = stratified_kfold(&manifest, cfg.k_folds, cfg.seed).unwrap();

    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    let rep_a = cross_validate(&manifest, &split, &cfg, Some(&out_a)).unwrap();
    let rep_b = cross_validate(&manifest, &split, &cfg, Some(&out_b)).unwrap();
    assert_eq!(rep_a, rep_b);

    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n.ends_with(".ckpt")));
    assert!(names.contains(&"metrics.csv".to_string()));
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    pass(7, "byte-identical reports and checkpoints", started, 600);
}
