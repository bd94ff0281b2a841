//! Shared test support: independent straight-line oracles for the attention
//! operators and a finite-difference harness. The oracles use plain nested
//! loops and their own arithmetic on the public parameter arrays; they never
//! call the implementation paths they are checking.

#![allow(dead_code)]

use fundusnet::attention::{AttentionConfig, AttentionParams};
use ndarray::{Array2, Array3, Array4};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn random_map(shape: (usize, usize, usize, usize), seed: u64) -> Array4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array4::from_shape_fn(shape, |_| rng.random_range(-2.0..2.0))
}

/// Channel attention evaluated with explicit loops.
pub fn oracle_cam(f: &Array4<f64>, p: &AttentionParams) -> Array4<f64> {
    let (batch, h, w, c) = f.dim();
    let n = (h * w) as f64;
    let hidden = p.gap_fc1.out_features;
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        let mut gap = vec![0.0; c];
        let mut gmp = vec![f64::NEG_INFINITY; c];
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let v = f[[b, i, j, ch]];
                    gap[ch] += v;
                    if v > gmp[ch] {
                        gmp[ch] = v;
                    }
                }
            }
        }
        for v in gap.iter_mut() {
            *v /= n;
        }
        let mlp = |input: &[f64], fc1: &fundusnet::nn::Linear, fc2: &fundusnet::nn::Linear| {
            let mut mid = vec![0.0; hidden];
            for (k, m) in mid.iter_mut().enumerate() {
                let mut acc = fc1.bias.data[[k]];
                for (ch, x) in input.iter().enumerate() {
                    acc += x * fc1.weight.data[[ch, k]];
                }
                *m = acc.max(0.0);
            }
            let mut out = vec![0.0; c];
            for (ch, o) in out.iter_mut().enumerate() {
                let mut acc = fc2.bias.data[[ch]];
                for (k, m) in mid.iter().enumerate() {
                    acc += m * fc2.weight.data[[k, ch]];
                }
                *o = acc;
            }
            out
        };
        let z1 = mlp(&gap, &p.gap_fc1, &p.gap_fc2);
        let z2 = mlp(&gmp, &p.gmp_fc1, &p.gmp_fc2);
        for ch in 0..c {
            let weight = sig(z1[ch] + z2[ch]);
            for i in 0..h {
                for j in 0..w {
                    out[[b, i, j, ch]] = weight * f[[b, i, j, ch]];
                }
            }
        }
    }
    out
}

/// Spatial attention via a direct nested-loop convolution of the (mean, max)
/// stack with zero "same" padding.
pub fn oracle_sam(f: &Array4<f64>, p: &AttentionParams) -> Array4<f64> {
    let (batch, h, w, c) = f.dim();
    let (kh, kw) = p.sam_conv.kernel;
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        let mut mean = vec![vec![0.0; w]; h];
        let mut max = vec![vec![f64::NEG_INFINITY; w]; h];
        for i in 0..h {
            for j in 0..w {
                let mut s = 0.0;
                for ch in 0..c {
                    let v = f[[b, i, j, ch]];
                    s += v;
                    if v > max[i][j] {
                        max[i][j] = v;
                    }
                }
                mean[i][j] = s / c as f64;
            }
        }
        for i in 0..h {
            for j in 0..w {
                let mut acc = p.sam_conv.bias.as_ref().expect("sam conv has bias").data[[0]];
                for ky in 0..kh {
                    for kx in 0..kw {
                        let iy = i as isize + ky as isize - ph as isize;
                        let ix = j as isize + kx as isize - pw as isize;
                        if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let row = (ky * kw + kx) * 2;
                        acc += p.sam_conv.weight.data[[row, 0]] * mean[iy as usize][ix as usize];
                        acc += p.sam_conv.weight.data[[row + 1, 0]] * max[iy as usize][ix as usize];
                    }
                }
                let m = sig(acc);
                for ch in 0..c {
                    out[[b, i, j, ch]] = m * f[[b, i, j, ch]];
                }
            }
        }
    }
    out
}

/// Depthwise Sobel magnitude with replicate padding, written directly.
pub fn oracle_edge(f: &Array4<f64>) -> Array4<f64> {
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (batch, h, w, c) = f.dim();
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for (di, krow) in kx.iter().enumerate() {
                        for (dj, &kxv) in krow.iter().enumerate() {
                            let ii = (i as isize + di as isize - 1)
                                .clamp(0, h as isize - 1) as usize;
                            let jj = (j as isize + dj as isize - 1)
                                .clamp(0, w as isize - 1) as usize;
                            gx += kxv * f[[b, ii, jj, ch]];
                            gy += ky[di][dj] * f[[b, ii, jj, ch]];
                        }
                    }
                    out[[b, i, j, ch]] = (gx * gx + gy * gy).sqrt();
                }
            }
        }
    }
    out
}

/// Two-pass loop mean / population std per (batch, channel).
pub fn oracle_stats(f: &Array4<f64>) -> (Array2<f64>, Array2<f64>) {
    let (batch, h, w, c) = f.dim();
    let n = (h * w) as f64;
    let mut mean = Array2::<f64>::zeros((batch, c));
    let mut std = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for ch in 0..c {
            let mut s = 0.0;
            for i in 0..h {
                for j in 0..w {
                    s += f[[b, i, j, ch]];
                }
            }
            let m = s / n;
            let mut v = 0.0;
            for i in 0..h {
                for j in 0..w {
                    let d = f[[b, i, j, ch]] - m;
                    v += d * d;
                }
            }
            mean[[b, ch]] = m;
            std[[b, ch]] = (v / n).sqrt();
        }
    }
    (mean, std)
}

pub fn oracle_composite(
    mean_f: &Array2<f64>,
    std_f: &Array2<f64>,
    mean_e: &Array2<f64>,
    std_e: &Array2<f64>,
) -> Array3<f64> {
    let (batch, c) = mean_f.dim();
    let mut t = Array3::<f64>::zeros((batch, c, 4));
    for b in 0..batch {
        for ch in 0..c {
            t[[b, ch, 0]] = mean_f[[b, ch]];
            t[[b, ch, 1]] = std_f[[b, ch]];
            t[[b, ch, 2]] = mean_e[[b, ch]];
            t[[b, ch, 3]] = std_e[[b, ch]];
        }
    }
    t
}

/// Kernel-2 channel conv, batch norm and sigmoid, written straight-line.
pub fn oracle_crm_gate(t: &Array3<f64>, p: &AttentionParams, training: bool) -> Array2<f64> {
    let (batch, c, feat) = t.dim();
    let mut conv = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for ch in 0..c {
            let mut acc = p.crm_conv_bias.data[[0]];
            for k in 0..2usize {
                if ch + k >= c {
                    continue;
                }
                for j in 0..feat {
                    acc += p.crm_conv_weight.data[[k, j]] * t[[b, ch + k, j]];
                }
            }
            conv[[b, ch]] = acc;
        }
    }
    let (mean, var) = if training {
        let n = (batch * c) as f64;
        let m = conv.iter().sum::<f64>() / n;
        let v = conv.iter().map(|&z| (z - m) * (z - m)).sum::<f64>() / n;
        (m, v)
    } else {
        (p.crm_bn_running_mean[[0]], p.crm_bn_running_var[[0]])
    };
    let gamma = p.crm_bn_gamma.data[[0]];
    let beta = p.crm_bn_beta.data[[0]];
    conv.mapv(|z| sig(gamma * (z - mean) / (var + p.crm_bn_epsilon).sqrt() + beta))
}

/// Full recalibration oracle composed from the sub-oracles.
pub fn oracle_crm_forward(f: &Array4<f64>, p: &AttentionParams, training: bool) -> Array4<f64> {
    let (mean_f, std_f) = oracle_stats(f);
    let edge = oracle_edge(f);
    let (mean_e, std_e) = oracle_stats(&edge);
    let t = oracle_composite(&mean_f, &std_f, &mean_e, &std_e);
    let gate = oracle_crm_gate(&t, p, training);
    let (batch, h, w, c) = f.dim();
    let mut out = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    out[[b, i, j, ch]] = gate[[b, ch]] * f[[b, i, j, ch]];
                }
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &Array4<f64>, b: &Array4<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Relative error convention used by the gradient checks.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

// ── finite-difference gradient harness ──────────────────────────────────────

use fundusnet::FeatureMap;

pub const STEP: f64 = 1e-3;
pub const TOLERANCE: f64 = 1e-3;

pub fn small_sam_params(channels: usize, seed: u64) -> AttentionParams {
    let cfg = AttentionConfig {
        sam_kernel_size: 3,
        ..AttentionConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AttentionParams::new(channels, &cfg, &mut rng).unwrap()
}

pub fn param_entries(p: &AttentionParams, filter: &str) -> Vec<(String, usize)> {
    let mut q = p.clone();
    let mut out = Vec::new();
    q.visit_params("attention", &mut |name, param| {
        if name.contains(filter) {
            for idx in 0..param.len() {
                out.push((name.to_string(), idx));
            }
        }
    });
    out
}

pub fn perturbed(p: &AttentionParams, name: &str, idx: usize, delta: f64) -> AttentionParams {
    let mut q = p.clone();
    let mut found = false;
    q.visit_params("attention", &mut |n, param| {
        if n == name {
            param.data.as_slice_mut().expect("contiguous param")[idx] += delta;
            found = true;
        }
    });
    assert!(found, "parameter {name} not found");
    q
}

pub fn read_grad(p: &AttentionParams, name: &str, idx: usize) -> f64 {
    let mut q = p.clone();
    let mut out = None;
    q.visit_params("attention", &mut |n, param| {
        if n == name {
            out = Some(param.grad().map_or(0.0, |g| {
                g.as_slice().expect("contiguous grad")[idx]
            }));
        }
    });
    out.expect("parameter found")
}

/// Runs the parameter + input gradient check for one operator.
pub fn check_operator(
    label: &str,
    p: &AttentionParams,
    f: &Array4<f64>,
    filter: &str,
    loss: &dyn Fn(&Array4<f64>, &AttentionParams) -> f64,
    analytic: &dyn Fn(&Array4<f64>, &mut AttentionParams) -> Array4<f64>,
) {
    let fmap = FeatureMap::new(f.clone()).unwrap();
    let mut trained = p.clone();
    let grad_input = analytic(f, &mut trained);

    for (name, idx) in param_entries(p, filter) {
        let plus = loss(f, &perturbed(p, &name, idx, STEP));
        let minus = loss(f, &perturbed(p, &name, idx, -STEP));
        let numeric = (plus - minus) / (2.0 * STEP);
        let exact = read_grad(&trained, &name, idx);
        let rel = relative_error(exact, numeric);
        assert!(
            rel <= TOLERANCE,
            "{label} {name}[{idx}]: analytic={exact:.9} numeric={numeric:.9} rel={rel:.2e}"
        );
    }

    let dim = f.dim();
    for flat in 0..fmap.data().len() {
        let mut plus_f = f.clone();
        plus_f.as_slice_mut().unwrap()[flat] += STEP;
        let mut minus_f = f.clone();
        minus_f.as_slice_mut().unwrap()[flat] -= STEP;
        let numeric = (loss(&plus_f, p) - loss(&minus_f, p)) / (2.0 * STEP);
        let exact = grad_input.as_slice().unwrap()[flat];
        let rel = relative_error(exact, numeric);
        assert!(
            rel <= TOLERANCE,
            "{label} input[{flat}] of {dim:?}: analytic={exact:.9} numeric={numeric:.9} rel={rel:.2e}"
        );
    }
}

