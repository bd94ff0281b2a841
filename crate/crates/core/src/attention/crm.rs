use ndarray::{Array2, Array4};

use super::edge::{edge_map_backward, edge_map_train, EdgeCache};
use super::stats::{build_composite, channel_stats, channel_stats_backward};
use super::AttentionParams;
use crate::error::{Error, Result};
use crate::nn::activation::{sigmoid, sigmoid_grad_from_output};
use crate::tensor::{ChannelStats, CompositeStatsTensor, FeatureMap, GatingTensor};

/// Channel gate from the composite statistics tensor: a kernel-2 convolution
/// slides along the channel axis (the 4 statistics are its input features,
/// one zero vector padded at the end so the gate keeps C entries), followed
/// by batch normalization and a sigmoid.
///
/// `training_mode` selects batch statistics for the normalization; running
/// statistics are left untouched either way. The training loop uses
/// [`crm_gate_train`], which also maintains the running estimates.
pub fn crm_gate(
    t: &CompositeStatsTensor,
    p: &AttentionParams,
    training_mode: bool,
) -> Result<GatingTensor> {
    let (gate, _) = gate_with_cache(t, p, training_mode)?;
    Ok(gate)
}

#[derive(Debug, Clone)]
pub struct GateCache {
    normalized: Array2<f64>, // (B, C) post-normalization, pre-scale
    batch_mean: f64,
    batch_var: f64,
    gate: Array2<f64>,
    training_mode: bool,
}

fn gate_with_cache(
    t: &CompositeStatsTensor,
    p: &AttentionParams,
    training_mode: bool,
) -> Result<(GatingTensor, GateCache)> {
    let (batch, c, feat) = t.dim();
    if c < 1 {
        return Err(Error::validation(
            "composite tensor must cover at least one channel".to_string(),
        ));
    }
    debug_assert_eq!(feat, 4);
    let w = &p.crm_conv_weight.data; // (2, 4)
    let bias = p.crm_conv_bias.data[[0]];

    // kernel-2 conv along channels; position C reads the zero pad
    let mut conv_out = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for ch in 0..c {
            let mut acc = bias;
            for k in 0..super::CRM_CONV_KERNEL {
                let pos = ch + k;
                if pos >= c {
                    continue; // zero padding at the end of the sequence
                }
                for j in 0..feat {
                    acc += w[[k, j]] * t.data[[b, pos, j]];
                }
            }
            conv_out[[b, ch]] = acc;
        }
    }

    let n = (batch * c) as f64;
    let (mean, var) = if training_mode {
        let m = conv_out.sum() / n;
        let v = conv_out.iter().map(|&z| (z - m) * (z - m)).sum::<f64>() / n;
        (m, v)
    } else {
        (p.crm_bn_running_mean[[0]], p.crm_bn_running_var[[0]])
    };

    let inv = 1.0 / (var + p.crm_bn_epsilon).sqrt();
    let gamma = p.crm_bn_gamma.data[[0]];
    let beta = p.crm_bn_beta.data[[0]];
    let normalized = conv_out.mapv(|z| (z - mean) * inv);
    let gate = normalized.mapv(|xn| sigmoid(gamma * xn + beta));

    Ok((
        GatingTensor {
            weights: gate.clone(),
        },
        GateCache {
            normalized,
            batch_mean: mean,
            batch_var: var,
            gate,
            training_mode,
        },
    ))
}

/// Training-path gate: batch statistics plus an in-place running-statistics
/// update with the configured momentum.
pub fn crm_gate_train(
    t: &CompositeStatsTensor,
    p: &mut AttentionParams,
) -> Result<(GatingTensor, GateCache)> {
    let (gate, cache) = gate_with_cache(t, p, true)?;
    let m = p.crm_bn_momentum;
    p.crm_bn_running_mean[[0]] = m * p.crm_bn_running_mean[[0]] + (1.0 - m) * cache.batch_mean;
    p.crm_bn_running_var[[0]] = m * p.crm_bn_running_var[[0]] + (1.0 - m) * cache.batch_var;
    Ok((gate, cache))
}

/// Backward through sigmoid, batch norm and the kernel-2 conv. Accumulates
/// conv/bn parameter gradients and returns the gradient wrt the composite
/// tensor, shape (B, C, 4).
pub fn crm_gate_backward(
    cache: &GateCache,
    t: &CompositeStatsTensor,
    grad_gate: &Array2<f64>,
    p: &mut AttentionParams,
) -> ndarray::Array3<f64> {
    let (batch, c, feat) = t.dim();
    let n = (batch * c) as f64;
    let gamma = p.crm_bn_gamma.data[[0]];
    let inv = 1.0 / (cache.batch_var + p.crm_bn_epsilon).sqrt();

    // sigmoid
    let grad_pre_sig = grad_gate * &cache.gate.mapv(sigmoid_grad_from_output);

    // scale and shift
    let mut grad_gamma = 0.0;
    let mut grad_beta = 0.0;
    for (g, xn) in grad_pre_sig.iter().zip(cache.normalized.iter()) {
        grad_gamma += g * xn;
        grad_beta += g;
    }
    p.crm_bn_gamma.grad_mut()[[0]] += grad_gamma;
    p.crm_bn_beta.grad_mut()[[0]] += grad_beta;

    // normalization
    let grad_conv: Array2<f64> = if cache.training_mode {
        let sum_g: f64 = grad_pre_sig.iter().sum();
        let sum_g_xn: f64 = grad_pre_sig
            .iter()
            .zip(cache.normalized.iter())
            .map(|(g, xn)| g * xn)
            .sum();
        let mut out = Array2::<f64>::zeros((batch, c));
        for b in 0..batch {
            for ch in 0..c {
                let g = grad_pre_sig[[b, ch]];
                let xn = cache.normalized[[b, ch]];
                out[[b, ch]] = gamma * inv / n * (n * g - sum_g - xn * sum_g_xn);
            }
        }
        out
    } else {
        grad_pre_sig.mapv(|g| g * gamma * inv)
    };

    // conv transpose back onto the composite tensor
    let w = p.crm_conv_weight.data.clone();
    let mut grad_t = ndarray::Array3::<f64>::zeros((batch, c, feat));
    let mut grad_w = ndarray::Array2::<f64>::zeros((super::CRM_CONV_KERNEL, feat));
    let mut grad_bias = 0.0;
    for b in 0..batch {
        for ch in 0..c {
            let g = grad_conv[[b, ch]];
            grad_bias += g;
            for k in 0..super::CRM_CONV_KERNEL {
                let pos = ch + k;
                if pos >= c {
                    continue;
                }
                for j in 0..feat {
                    grad_w[[k, j]] += g * t.data[[b, pos, j]];
                    grad_t[[b, pos, j]] += g * w[[k, j]];
                }
            }
        }
    }
    {
        let acc = p.crm_conv_weight.grad_mut();
        for k in 0..super::CRM_CONV_KERNEL {
            for j in 0..feat {
                acc[[k, j]] += grad_w[[k, j]];
            }
        }
    }
    p.crm_conv_bias.grad_mut()[[0]] += grad_bias;
    grad_t
}

/// Full channel recalibration: gate the input with weights computed from its
/// own intensity statistics and the statistics of its edge map.
pub fn crm_forward(
    f: &FeatureMap,
    p: &AttentionParams,
    training_mode: bool,
) -> Result<FeatureMap> {
    let stats_f = channel_stats(f);
    let edge = edge_map_train(f).0;
    let stats_e = channel_stats(&edge);
    let t = build_composite(&stats_f, &stats_e)?;
    let gate = crm_gate(&t, p, training_mode)?;
    Ok(apply_gate(f, &gate))
}

fn apply_gate(f: &FeatureMap, gate: &GatingTensor) -> FeatureMap {
    let x = f.data();
    let (batch, h, w, c) = x.dim();
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    out[[b, i, j, ch]] = gate.weights[[b, ch]] * x[[b, i, j, ch]];
                }
            }
        }
    }
    FeatureMap::from_computed(out)
}

#[derive(Debug)]
pub struct CrmCache {
    input: Array4<f64>,
    edge: Array4<f64>,
    edge_cache: EdgeCache,
    stats_f: ChannelStats,
    stats_e: ChannelStats,
    composite: CompositeStatsTensor,
    gate_cache: GateCache,
}

/// Training-path forward; updates BN running statistics.
pub fn crm_forward_train(
    f: &FeatureMap,
    p: &mut AttentionParams,
) -> Result<(FeatureMap, CrmCache)> {
    let stats_f = channel_stats(f);
    let (edge, edge_cache) = edge_map_train(f);
    let stats_e = channel_stats(&edge);
    let t = build_composite(&stats_f, &stats_e)?;
    let (gate, gate_cache) = crm_gate_train(&t, p)?;
    let out = apply_gate(f, &gate);
    Ok((
        out,
        CrmCache {
            input: f.data().clone(),
            edge: edge.into_inner(),
            edge_cache,
            stats_f,
            stats_e,
            composite: t,
            gate_cache,
        },
    ))
}

/// Backward through the gate product and both statistics paths (intensity
/// and edge). Accumulates parameter gradients; returns grad wrt the input.
pub fn crm_backward(
    cache: &CrmCache,
    grad_out: &Array4<f64>,
    p: &mut AttentionParams,
) -> Array4<f64> {
    let (batch, h, w, c) = cache.input.dim();

    let gate = &cache.gate_cache.gate;
    let mut grad_gate = Array2::<f64>::zeros((batch, c));
    let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let g = grad_out[[b, i, j, ch]];
                    grad_gate[[b, ch]] += g * cache.input[[b, i, j, ch]];
                    grad_x[[b, i, j, ch]] = g * gate[[b, ch]];
                }
            }
        }
    }

    let grad_t = crm_gate_backward(&cache.gate_cache, &cache.composite, &grad_gate, p);

    // unpack the four statistic gradients
    let mut g_mean_f = Array2::<f64>::zeros((batch, c));
    let mut g_std_f = Array2::<f64>::zeros((batch, c));
    let mut g_mean_e = Array2::<f64>::zeros((batch, c));
    let mut g_std_e = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for ch in 0..c {
            g_mean_f[[b, ch]] = grad_t[[b, ch, 0]];
            g_std_f[[b, ch]] = grad_t[[b, ch, 1]];
            g_mean_e[[b, ch]] = grad_t[[b, ch, 2]];
            g_std_e[[b, ch]] = grad_t[[b, ch, 3]];
        }
    }

    grad_x += &channel_stats_backward(&cache.input, &cache.stats_f, &g_mean_f, &g_std_f);
    let grad_edge = channel_stats_backward(&cache.edge, &cache.stats_e, &g_mean_e, &g_std_e);
    grad_x += &edge_map_backward(&cache.edge_cache, &grad_edge);

    grad_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::AttentionConfig;
    use ndarray::Array4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(channels: usize) -> AttentionParams {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        AttentionParams::new(channels, &AttentionConfig::default(), &mut rng).unwrap()
    }

    #[test]
    fn zero_bias_identity_bn_gives_half_gate() {
        let mut p = params(3);
        p.crm_conv_weight.data.fill(0.0);
        p.crm_conv_bias.data.fill(0.0);
        // running mean 0, var 1, scale 1, shift 0 are the construction defaults
        let t = CompositeStatsTensor::new(ndarray::Array3::zeros((2, 3, 4))).unwrap();
        let g = crm_gate(&t, &p, false).unwrap();
        let expected = sigmoid(0.0 / (1.0f64 + p.crm_bn_epsilon).sqrt());
        for &v in g.weights.iter() {
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_recalibrates_to_zero() {
        let p = params(4);
        let f = FeatureMap::new(Array4::zeros((1, 4, 4, 4))).unwrap();
        let out = crm_forward(&f, &p, false).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gate_strictly_attenuates() {
        let p = params(2);
        let f = FeatureMap::new(Array4::from_shape_fn((1, 4, 4, 2), |(_, i, j, ch)| {
            (i as f64 - j as f64) * 0.5 + ch as f64 + 1.0
        }))
        .unwrap();
        let out = crm_forward(&f, &p, true).unwrap();
        for (o, x) in out.data().iter().zip(f.data().iter()) {
            if *x != 0.0 {
                assert!(o.abs() < x.abs());
            }
        }
    }

    #[test]
    fn running_stats_move_only_on_train_path() {
        let mut p = params(2);
        let f = FeatureMap::new(Array4::from_shape_fn((2, 3, 3, 2), |(b, i, j, ch)| {
            (b + i + j + ch) as f64 * 0.25
        }))
        .unwrap();
        let before = p.crm_bn_running_mean[[0]];
        let _ = crm_forward(&f, &p, true).unwrap();
        assert_eq!(p.crm_bn_running_mean[[0]], before);
        let _ = crm_forward_train(&f, &mut p).unwrap();
        assert_ne!(p.crm_bn_running_mean[[0]], before);
    }
}
