use rand_chacha::ChaCha8Rng;

use super::common::push_conv_bn_relu;
use crate::nn::{AvgPool2d, AvgPoolLayer, Sequential};

/// Reduced backbone for CPU-scale smoke runs and tests: an aggressive average
/// pool followed by two strided conv blocks. 256x256x3 in, 8x8xC out.
pub fn build(out_channels: usize, rng: &mut ChaCha8Rng) -> Sequential {
    let mut net = Sequential::new();
    net.push(AvgPoolLayer::new(AvgPool2d::new((8, 8), (8, 8), (0, 0))));
    push_conv_bn_relu(&mut net, 3, 8, (3, 3), (2, 2), (1, 1), rng);
    push_conv_bn_relu(&mut net, 8, out_channels, (3, 3), (2, 2), (1, 1), rng);
    net
}
