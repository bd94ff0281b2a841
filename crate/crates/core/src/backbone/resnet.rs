use rand_chacha::ChaCha8Rng;

use super::blocks::ResidualAdd;
use super::common::{push_conv_bn, push_conv_bn_relu, push_maxpool};
use crate::nn::Sequential;

const EXPANSION: usize = 4;

/// 50-layer residual network with bottleneck blocks; 256x256x3 in,
/// 8x8x2048 out.
pub fn build(rng: &mut ChaCha8Rng) -> Sequential {
    let mut net = Sequential::new();
    push_conv_bn_relu(&mut net, 3, 64, (7, 7), (2, 2), (3, 3), rng);
    push_maxpool(&mut net, 3, 2, 1);

    let mut inplanes = 64usize;
    for (planes, blocks, stride) in [(64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)] {
        for b in 0..blocks {
            let s = if b == 0 { stride } else { 1 };
            net.push(bottleneck(inplanes, planes, s, rng));
            inplanes = planes * EXPANSION;
        }
    }
    debug_assert_eq!(inplanes, 2048);
    net
}

fn bottleneck(inplanes: usize, planes: usize, stride: usize, rng: &mut ChaCha8Rng) -> ResidualAdd {
    let out = planes * EXPANSION;
    let mut main = Sequential::new();
    push_conv_bn_relu(&mut main, inplanes, planes, (1, 1), (1, 1), (0, 0), rng);
    push_conv_bn_relu(&mut main, planes, planes, (3, 3), (stride, stride), (1, 1), rng);
    push_conv_bn(&mut main, planes, out, (1, 1), (1, 1), (0, 0), rng);

    let shortcut = if stride != 1 || inplanes != out {
        let mut s = Sequential::new();
        push_conv_bn(&mut s, inplanes, out, (1, 1), (stride, stride), (0, 0), rng);
        Some(s)
    } else {
        None
    };
    ResidualAdd::new(main, shortcut, true)
}
