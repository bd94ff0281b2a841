use rand_chacha::ChaCha8Rng;

use super::blocks::ParallelConcat;
use super::common::{push_conv_bn_relu, push_maxpool};
use crate::nn::{AvgPool2d, AvgPoolLayer, Sequential};

/// Inception-v3 feature extractor; 256x256x3 in, 6x6x2048 out.
pub fn build(rng: &mut ChaCha8Rng) -> Sequential {
    let mut net = Sequential::new();
    // stem: 256 -> 127 -> 125 -> 125 -> 62 -> 62 -> 60 -> 29
    push_conv_bn_relu(&mut net, 3, 32, (3, 3), (2, 2), (0, 0), rng);
    push_conv_bn_relu(&mut net, 32, 32, (3, 3), (1, 1), (0, 0), rng);
    push_conv_bn_relu(&mut net, 32, 64, (3, 3), (1, 1), (1, 1), rng);
    push_maxpool(&mut net, 3, 2, 0);
    push_conv_bn_relu(&mut net, 64, 80, (1, 1), (1, 1), (0, 0), rng);
    push_conv_bn_relu(&mut net, 80, 192, (3, 3), (1, 1), (0, 0), rng);
    push_maxpool(&mut net, 3, 2, 0);

    net.push(block_a(192, 32, rng)); // -> 256
    net.push(block_a(256, 64, rng)); // -> 288
    net.push(block_a(288, 64, rng)); // -> 288
    net.push(block_b(288, rng)); // 29 -> 14, -> 768
    net.push(block_c(768, 128, rng));
    net.push(block_c(768, 160, rng));
    net.push(block_c(768, 160, rng));
    net.push(block_c(768, 192, rng));
    net.push(block_d(768, rng)); // 14 -> 6, -> 1280
    net.push(block_e(1280, rng)); // -> 2048
    net.push(block_e(2048, rng)); // -> 2048
    net
}

fn conv_branch(
    cin: usize,
    stages: &[(usize, (usize, usize), (usize, usize), (usize, usize))],
    rng: &mut ChaCha8Rng,
) -> Sequential {
    let mut s = Sequential::new();
    let mut c = cin;
    for &(cout, kernel, stride, padding) in stages {
        push_conv_bn_relu(&mut s, c, cout, kernel, stride, padding, rng);
        c = cout;
    }
    s
}

fn avg_pool_branch(cin: usize, cout: usize, rng: &mut ChaCha8Rng) -> Sequential {
    let mut s = Sequential::new();
    s.push(AvgPoolLayer::new(AvgPool2d::new((3, 3), (1, 1), (1, 1))));
    push_conv_bn_relu(&mut s, cin, cout, (1, 1), (1, 1), (0, 0), rng);
    s
}

/// 1x1 / 5x5 / double-3x3 / pooled branches; output 224 + pool_features.
fn block_a(cin: usize, pool_features: usize, rng: &mut ChaCha8Rng) -> ParallelConcat {
    ParallelConcat::new(vec![
        conv_branch(cin, &[(64, (1, 1), (1, 1), (0, 0))], rng),
        conv_branch(
            cin,
            &[(48, (1, 1), (1, 1), (0, 0)), (64, (5, 5), (1, 1), (2, 2))],
            rng,
        ),
        conv_branch(
            cin,
            &[
                (64, (1, 1), (1, 1), (0, 0)),
                (96, (3, 3), (1, 1), (1, 1)),
                (96, (3, 3), (1, 1), (1, 1)),
            ],
            rng,
        ),
        avg_pool_branch(cin, pool_features, rng),
    ])
}

/// Spatial reduction block: stride-2 conv towers plus max pooling.
fn block_b(cin: usize, rng: &mut ChaCha8Rng) -> ParallelConcat {
    let mut pool = Sequential::new();
    push_maxpool(&mut pool, 3, 2, 0);
    ParallelConcat::new(vec![
        conv_branch(cin, &[(384, (3, 3), (2, 2), (0, 0))], rng),
        conv_branch(
            cin,
            &[
                (64, (1, 1), (1, 1), (0, 0)),
                (96, (3, 3), (1, 1), (1, 1)),
                (96, (3, 3), (2, 2), (0, 0)),
            ],
            rng,
        ),
        pool,
    ])
}

/// Factorized 7x7 block; `c7` is the tower width. Output 768.
fn block_c(cin: usize, c7: usize, rng: &mut ChaCha8Rng) -> ParallelConcat {
    ParallelConcat::new(vec![
        conv_branch(cin, &[(192, (1, 1), (1, 1), (0, 0))], rng),
        conv_branch(
            cin,
            &[
                (c7, (1, 1), (1, 1), (0, 0)),
                (c7, (1, 7), (1, 1), (0, 3)),
                (192, (7, 1), (1, 1), (3, 0)),
            ],
            rng,
        ),
        conv_branch(
            cin,
            &[
                (c7, (1, 1), (1, 1), (0, 0)),
                (c7, (7, 1), (1, 1), (3, 0)),
                (c7, (1, 7), (1, 1), (0, 3)),
                (c7, (7, 1), (1, 1), (3, 0)),
                (192, (1, 7), (1, 1), (0, 3)),
            ],
            rng,
        ),
        avg_pool_branch(cin, 192, rng),
    ])
}

/// Second reduction block: 14 -> 6 spatially, 768 -> 1280 channels.
fn block_d(cin: usize, rng: &mut ChaCha8Rng) -> ParallelConcat {
    let mut pool = Sequential::new();
    push_maxpool(&mut pool, 3, 2, 0);
    ParallelConcat::new(vec![
        conv_branch(
            cin,
            &[(192, (1, 1), (1, 1), (0, 0)), (320, (3, 3), (2, 2), (0, 0))],
            rng,
        ),
        conv_branch(
            cin,
            &[
                (192, (1, 1), (1, 1), (0, 0)),
                (192, (1, 7), (1, 1), (0, 3)),
                (192, (7, 1), (1, 1), (3, 0)),
                (192, (3, 3), (2, 2), (0, 0)),
            ],
            rng,
        ),
        pool,
    ])
}

/// Expanded block with split 1x3/3x1 towers; output 2048.
fn block_e(cin: usize, rng: &mut ChaCha8Rng) -> ParallelConcat {
    let mut b3x3 = Sequential::new();
    push_conv_bn_relu(&mut b3x3, cin, 384, (1, 1), (1, 1), (0, 0), rng);
    b3x3.push(ParallelConcat::new(vec![
        conv_branch(384, &[(384, (1, 3), (1, 1), (0, 1))], rng),
        conv_branch(384, &[(384, (3, 1), (1, 1), (1, 0))], rng),
    ]));

    let mut b3x3dbl = Sequential::new();
    push_conv_bn_relu(&mut b3x3dbl, cin, 448, (1, 1), (1, 1), (0, 0), rng);
    push_conv_bn_relu(&mut b3x3dbl, 448, 384, (3, 3), (1, 1), (1, 1), rng);
    b3x3dbl.push(ParallelConcat::new(vec![
        conv_branch(384, &[(384, (1, 3), (1, 1), (0, 1))], rng),
        conv_branch(384, &[(384, (3, 1), (1, 1), (1, 0))], rng),
    ]));

    ParallelConcat::new(vec![
        conv_branch(cin, &[(320, (1, 1), (1, 1), (0, 0))], rng),
        b3x3,
        b3x3dbl,
        avg_pool_branch(cin, 192, rng),
    ])
}
