use ndarray::{ArrayD, IxDyn};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Uniform fan-in initialization: U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
///
/// Every new dense/conv weight in the model is drawn from this scheme with a
/// caller-supplied seeded stream, so two builds from the same seed are
/// bit-identical.
pub fn uniform_fan_in(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    ArrayD::from_shape_vec(IxDyn(shape), data).expect("shape/product mismatch")
}

/// Deterministic sub-stream derivation: mixes a base seed with stream labels.
///
/// SplitMix64 finalizer; distinct labels give statistically independent
/// streams without any shared mutable state.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut z = base;
    for &label in labels {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(label.wrapping_mul(0xbf58476d1ce4e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}
