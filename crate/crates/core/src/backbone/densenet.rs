use rand_chacha::ChaCha8Rng;

use super::blocks::DenseBlock;
use super::common::{push_conv_bn_relu, push_maxpool, BN_EPS, BN_MOMENTUM};
use crate::nn::{
    AvgPool2d, AvgPoolLayer, BatchNorm2d, BatchNormLayer, Conv2d, ConvLayer, ReluLayer, Sequential,
};

const GROWTH: usize = 32;
const BOTTLENECK_WIDTH: usize = 4 * GROWTH;
const BLOCK_SIZES: [usize; 4] = [6, 12, 24, 16];

/// 121-layer densely connected network; 256x256x3 in, 8x8x1024 out.
pub fn build(rng: &mut ChaCha8Rng) -> Sequential {
    let mut net = Sequential::new();
    push_conv_bn_relu(&mut net, 3, 64, (7, 7), (2, 2), (3, 3), rng);
    push_maxpool(&mut net, 3, 2, 1);

    let mut channels = 64usize;
    for (block_idx, &n_units) in BLOCK_SIZES.iter().enumerate() {
        let mut units = Vec::with_capacity(n_units);
        for i in 0..n_units {
            units.push(dense_unit(channels + i * GROWTH, rng));
        }
        net.push(DenseBlock::new(units, channels, GROWTH));
        channels += n_units * GROWTH;
        if block_idx + 1 < BLOCK_SIZES.len() {
            // transition: halve channels, halve resolution
            let mut t = Sequential::new();
            t.push(BatchNormLayer::new(BatchNorm2d::new(channels, BN_EPS, BN_MOMENTUM)));
            t.push(ReluLayer::new());
            t.push(ConvLayer::new(Conv2d::new(
                channels,
                channels / 2,
                (1, 1),
                (1, 1),
                (0, 0),
                false,
                rng,
            )));
            t.push(AvgPoolLayer::new(AvgPool2d::new((2, 2), (2, 2), (0, 0))));
            net.push(t);
            channels /= 2;
        }
    }
    debug_assert_eq!(channels, 1024);
    net.push(BatchNormLayer::new(BatchNorm2d::new(channels, BN_EPS, BN_MOMENTUM)));
    net.push(ReluLayer::new());
    net
}

/// One bottlenecked unit: BN-ReLU-1x1 then BN-ReLU-3x3 contributing GROWTH
/// channels.
fn dense_unit(cin: usize, rng: &mut ChaCha8Rng) -> Sequential {
    let mut u = Sequential::new();
    u.push(BatchNormLayer::new(BatchNorm2d::new(cin, BN_EPS, BN_MOMENTUM)));
    u.push(ReluLayer::new());
    u.push(ConvLayer::new(Conv2d::new(
        cin,
        BOTTLENECK_WIDTH,
        (1, 1),
        (1, 1),
        (0, 0),
        false,
        rng,
    )));
    u.push(BatchNormLayer::new(BatchNorm2d::new(
        BOTTLENECK_WIDTH,
        BN_EPS,
        BN_MOMENTUM,
    )));
    u.push(ReluLayer::new());
    u.push(ConvLayer::new(Conv2d::new(
        BOTTLENECK_WIDTH,
        GROWTH,
        (3, 3),
        (1, 1),
        (1, 1),
        false,
        rng,
    )));
    u
}
