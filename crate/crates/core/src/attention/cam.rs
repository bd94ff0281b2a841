use ndarray::{Array2, Array4};

use super::AttentionParams;
use crate::error::Result;
use crate::nn::activation::{relu, relu_grad, sigmoid, sigmoid_grad_from_output};
use crate::nn::pool::{global_avg_pool, global_max_pool};
use crate::tensor::FeatureMap;

/// Channel attention: per-channel sigmoid weights from two pooled summaries,
/// each sent through its own two-layer bottleneck MLP, summed before the
/// sigmoid. Output is the input scaled channel-wise.
pub fn cam_forward(f: &FeatureMap, p: &AttentionParams) -> Result<FeatureMap> {
    let (out, _) = cam_forward_train(f, p)?;
    Ok(out)
}

/// Intermediate values needed by [`cam_backward`].
#[derive(Debug, Clone)]
pub struct CamCache {
    input: Array4<f64>,
    gap: Array2<f64>,
    gmp: Array2<f64>,
    gmp_argmax: Vec<(usize, usize)>,
    gap_hidden_pre: Array2<f64>,
    gap_hidden: Array2<f64>,
    gmp_hidden_pre: Array2<f64>,
    gmp_hidden: Array2<f64>,
    weights: Array2<f64>,
}

pub fn cam_forward_train(
    f: &FeatureMap,
    p: &AttentionParams,
) -> Result<(FeatureMap, CamCache)> {
    p.check_channels(f)?;
    let x = f.data();
    let gap = global_avg_pool(x);
    let (gmp, gmp_argmax) = global_max_pool(x);

    let gap_hidden_pre = p.gap_fc1.forward(&gap);
    let gap_hidden = gap_hidden_pre.mapv(relu);
    let gap_out = p.gap_fc2.forward(&gap_hidden);

    let gmp_hidden_pre = p.gmp_fc1.forward(&gmp);
    let gmp_hidden = gmp_hidden_pre.mapv(relu);
    let gmp_out = p.gmp_fc2.forward(&gmp_hidden);

    let weights = (&gap_out + &gmp_out).mapv(sigmoid);

    let (batch, h, w, c) = x.dim();
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    out[[b, i, j, ch]] = weights[[b, ch]] * x[[b, i, j, ch]];
                }
            }
        }
    }
    Ok((
        FeatureMap::from_computed(out),
        CamCache {
            input: x.clone(),
            gap,
            gmp,
            gmp_argmax,
            gap_hidden_pre,
            gap_hidden,
            gmp_hidden_pre,
            gmp_hidden,
            weights,
        },
    ))
}

/// Accumulates MLP parameter gradients; returns the gradient wrt the input.
pub fn cam_backward(
    cache: &CamCache,
    grad_out: &Array4<f64>,
    p: &mut AttentionParams,
) -> Array4<f64> {
    let (batch, h, w, c) = cache.input.dim();
    let spatial = (h * w) as f64;

    // split the product rule: gradient into the weights and into the input
    let mut grad_weights = Array2::<f64>::zeros((batch, c));
    let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let g = grad_out[[b, i, j, ch]];
                    grad_weights[[b, ch]] += g * cache.input[[b, i, j, ch]];
                    grad_x[[b, i, j, ch]] = g * cache.weights[[b, ch]];
                }
            }
        }
    }

    let grad_z = &grad_weights * &cache.weights.mapv(sigmoid_grad_from_output);

    // average-pool MLP path
    let mut g_hidden = p.gap_fc2.backward(&cache.gap_hidden, &grad_z);
    g_hidden.zip_mut_with(&cache.gap_hidden_pre, |g, &pre| *g *= relu_grad(pre));
    let grad_gap = p.gap_fc1.backward(&cache.gap, &g_hidden);

    // max-pool MLP path
    let mut g_hidden = p.gmp_fc2.backward(&cache.gmp_hidden, &grad_z);
    g_hidden.zip_mut_with(&cache.gmp_hidden_pre, |g, &pre| *g *= relu_grad(pre));
    let grad_gmp = p.gmp_fc1.backward(&cache.gmp, &g_hidden);

    for b in 0..batch {
        for ch in 0..c {
            let spread = grad_gap[[b, ch]] / spatial;
            for i in 0..h {
                for j in 0..w {
                    grad_x[[b, i, j, ch]] += spread;
                }
            }
            let (mi, mj) = cache.gmp_argmax[b * c + ch];
            grad_x[[b, mi, mj, ch]] += grad_gmp[[b, ch]];
        }
    }
    grad_x
}
