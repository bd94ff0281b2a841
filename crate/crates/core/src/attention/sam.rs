use ndarray::{Array3, Array4};

use super::AttentionParams;
use crate::error::Result;
use crate::nn::activation::{sigmoid, sigmoid_grad_from_output};
use crate::tensor::FeatureMap;

/// Spatial attention: the channel-wise mean and max maps are stacked into a
/// two-channel image, convolved down to one channel with "same" padding, and
/// squashed by a sigmoid; the resulting map scales every channel of the input.
pub fn sam_forward(f: &FeatureMap, p: &AttentionParams) -> Result<FeatureMap> {
    let (out, _) = sam_forward_train(f, p)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SamCache {
    input: Array4<f64>,
    stacked: Array4<f64>, // (B, H, W, 2): [channel mean, channel max]
    max_argmax: Vec<usize>,
    mask: Array3<f64>, // (B, H, W) sigmoid map
}

pub fn sam_forward_train(
    f: &FeatureMap,
    p: &AttentionParams,
) -> Result<(FeatureMap, SamCache)> {
    let x = f.data();
    let (batch, h, w, c) = x.dim();
    let mut stacked = Array4::<f64>::zeros((batch, h, w, 2));
    let mut max_argmax = vec![0usize; batch * h * w];
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let mut sum = 0.0;
                let mut best = f64::NEG_INFINITY;
                let mut best_ch = 0;
                for ch in 0..c {
                    let v = x[[b, i, j, ch]];
                    sum += v;
                    if v > best {
                        best = v;
                        best_ch = ch;
                    }
                }
                stacked[[b, i, j, 0]] = sum / c as f64;
                stacked[[b, i, j, 1]] = best;
                max_argmax[(b * h + i) * w + j] = best_ch;
            }
        }
    }

    let conv_out = p.sam_conv.forward(&stacked); // (B, H, W, 1)
    let mut mask = Array3::<f64>::zeros((batch, h, w));
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let m = sigmoid(conv_out[[b, i, j, 0]]);
                mask[[b, i, j]] = m;
                for ch in 0..c {
                    out[[b, i, j, ch]] = m * x[[b, i, j, ch]];
                }
            }
        }
    }
    Ok((
        FeatureMap::from_computed(out),
        SamCache {
            input: x.clone(),
            stacked,
            max_argmax,
            mask,
        },
    ))
}

pub fn sam_backward(
    cache: &SamCache,
    grad_out: &Array4<f64>,
    p: &mut AttentionParams,
) -> Array4<f64> {
    let (batch, h, w, c) = cache.input.dim();
    let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
    let mut grad_conv = Array4::<f64>::zeros((batch, h, w, 1));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let m = cache.mask[[b, i, j]];
                let mut grad_mask = 0.0;
                for ch in 0..c {
                    let g = grad_out[[b, i, j, ch]];
                    grad_mask += g * cache.input[[b, i, j, ch]];
                    grad_x[[b, i, j, ch]] = g * m;
                }
                grad_conv[[b, i, j, 0]] = grad_mask * sigmoid_grad_from_output(m);
            }
        }
    }

    let grad_stacked = p.sam_conv.backward(&cache.stacked, &grad_conv);

    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let g_mean = grad_stacked[[b, i, j, 0]] / c as f64;
                for ch in 0..c {
                    grad_x[[b, i, j, ch]] += g_mean;
                }
                let best_ch = cache.max_argmax[(b * h + i) * w + j];
                grad_x[[b, i, j, best_ch]] += grad_stacked[[b, i, j, 1]];
            }
        }
    }
    grad_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::AttentionConfig;
    use ndarray::Array4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_preserved_and_zero_maps_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = AttentionParams::new(16, &AttentionConfig::default(), &mut rng).unwrap();
        let f = FeatureMap::new(Array4::zeros((2, 8, 8, 16))).unwrap();
        let out = sam_forward(&f, &p).unwrap();
        assert_eq!(out.dim(), (2, 8, 8, 16));
        assert!(out.data().iter().all(|&v| v == 0.0));
    }
}
