//! Shared fixtures for the criterion benches.

use ndarray::Array4;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fundusnet::attention::{AttentionConfig, AttentionParams};
use fundusnet::FeatureMap;

pub fn feature_map(shape: (usize, usize, usize, usize), seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::new(Array4::from_shape_fn(shape, |_| rng.random_range(-1.0..1.0))).unwrap()
}

pub fn attention_params(channels: usize, seed: u64) -> AttentionParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AttentionParams::new(channels, &AttentionConfig::default(), &mut rng).unwrap()
}
