use rand_chacha::ChaCha8Rng;

use crate::nn::{
    BatchNorm2d, BatchNormLayer, Conv2d, ConvLayer, MaxPool2d, MaxPoolLayer, ReluLayer, Sequential,
};

pub(crate) const BN_EPS: f64 = 1e-5;
pub(crate) const BN_MOMENTUM: f64 = 0.99;

/// Bias-free convolution followed by batch norm and ReLU, pushed onto `seq`.
pub(crate) fn push_conv_bn_relu(
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
    seq.push(ReluLayer::new());
}

pub(crate) fn push_conv_bn(
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
}

pub(crate) fn push_maxpool(seq: &mut Sequential, kernel: usize, stride: usize, padding: usize) {
    seq.push(MaxPoolLayer::new(MaxPool2d::new(
        (kernel, kernel),
        (stride, stride),
        (padding, padding),
    )));
}
