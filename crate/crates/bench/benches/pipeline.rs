//! Data-path and reduced-model benchmarks: bilinear resize, augmentation and
//! a full stub-backbone forward pass on one 256x256 image.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::{Array3, Array4};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fundusnet::data::{augment, augment_rng, resize_bilinear, AugmentConfig};
use fundusnet::model::build_model;
use fundusnet::training::TrainConfig;

fn data_path(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let src = Array3::from_shape_fn((512, 512, 3), |_| rng.random_range(0.0..1.0));
    c.bench_function("resize_512_to_256", |b| {
        b.iter(|| resize_bilinear(black_box(&src), 256, 256))
    });

    let img = resize_bilinear(&src, 256, 256);
    let cfg = AugmentConfig::default();
    c.bench_function("augment_256", |b| {
        b.iter(|| {
            let mut stream = augment_rng(7, 0, 0);
            augment(black_box(&img), &cfg, &mut stream)
        })
    });
}

fn stub_forward(c: &mut Criterion) {
    let mut cfg = TrainConfig::default();
    cfg.set("backbone", "stub").unwrap();
    cfg.set("stub_channels", "16").unwrap();
    let model =
        build_model(&cfg.backbone_spec().unwrap(), &cfg.attention_config(), cfg.seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let images = Array4::from_shape_fn((1, 256, 256, 3), |_| rng.random_range(0.0..1.0));
    c.bench_function("stub_model_forward_1x256", |b| {
        b.iter(|| model.forward(black_box(&images), false).unwrap())
    });
}

criterion_group!(benches, data_path, stub_forward);
criterion_main!(benches);
