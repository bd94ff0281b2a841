use rand_chacha::ChaCha8Rng;

use super::blocks::ResidualAdd;
use super::common::{BN_EPS, BN_MOMENTUM};
use crate::nn::{
    BatchNorm2d, BatchNormLayer, Conv2d, ConvLayer, DepthwiseConv2d, DepthwiseConvLayer,
    ReluLayer, Sequential,
};

// (expansion, output channels, repeats, first stride)
const SETTINGS: [(usize, usize, usize, usize); 7] = [
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
];

/// Inverted-residual network with linear bottlenecks; 256x256x3 in,
/// 8x8x1280 out.
pub fn build(rng: &mut ChaCha8Rng) -> Sequential {
    let mut net = Sequential::new();
    push_conv_bn_relu6(&mut net, 3, 32, (3, 3), (2, 2), (1, 1), rng);

    let mut cin = 32usize;
    for (expand, cout, repeats, first_stride) in SETTINGS {
        for r in 0..repeats {
            let stride = if r == 0 { first_stride } else { 1 };
            push_inverted_residual(&mut net, cin, cout, stride, expand, rng);
            cin = cout;
        }
    }
    push_conv_bn_relu6(&mut net, cin, 1280, (1, 1), (1, 1), (0, 0), rng);
    net
}

fn push_conv_bn_relu6(
    seq: &mut Sequential,
    cin: usize,
    cout: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
    rng: &mut ChaCha8Rng,
) {
    seq.push(ConvLayer::new(Conv2d::new(
        cin, cout, kernel, stride, padding, false, rng,
    )));
    seq.push(BatchNormLayer::new(BatchNorm2d::new(cout, BN_EPS, BN_MOMENTUM)));
    seq.push(ReluLayer::relu6());
}

fn push_inverted_residual(
    net: &mut Sequential,
    cin: usize,
    cout: usize,
    stride: usize,
    expand: usize,
    rng: &mut ChaCha8Rng,
) {
    let hidden = cin * expand;
    let mut main = Sequential::new();
    if expand != 1 {
        push_conv_bn_relu6(&mut main, cin, hidden, (1, 1), (1, 1), (0, 0), rng);
    }
    main.push(DepthwiseConvLayer::new(DepthwiseConv2d::new(
        hidden,
        (3, 3),
        (stride, stride),
        (1, 1),
        rng,
    )));
    main.push(BatchNormLayer::new(BatchNorm2d::new(hidden, BN_EPS, BN_MOMENTUM)));
    main.push(ReluLayer::relu6());
    // linear projection: no activation after the pointwise conv
    main.push(ConvLayer::new(Conv2d::new(
        hidden,
        cout,
        (1, 1),
        (1, 1),
        (0, 0),
        false,
        rng,
    )));
    main.push(BatchNormLayer::new(BatchNorm2d::new(cout, BN_EPS, BN_MOMENTUM)));

    if stride == 1 && cin == cout {
        net.push(ResidualAdd::new(main, None, false));
    } else {
        net.push(main);
    }
}
