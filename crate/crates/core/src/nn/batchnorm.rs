use ndarray::{Array1, Array4, ArrayD, IxDyn};

use super::param::Param;

/// Per-channel batch normalization over (B, H, W, C) tensors.
///
/// Training mode normalizes with batch statistics and (when requested)
/// updates the running estimates; inference mode uses the running values.
/// Only the owning training loop may call the mutating paths.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: ArrayD<f64>,
    pub running_var: ArrayD<f64>,
    pub epsilon: f64,
    pub momentum: f64,
    pub channels: usize,
}

/// Values cached by the training-mode forward pass for backprop.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: Array4<f64>,
    pub batch_mean: Array1<f64>,
    pub batch_var: Array1<f64>,
}

impl BatchNorm2d {
    pub fn new(channels: usize, epsilon: f64, momentum: f64) -> Self {
        BatchNorm2d {
            gamma: Param::new(ArrayD::ones(IxDyn(&[channels]))),
            beta: Param::zeros(&[channels]),
            running_mean: ArrayD::zeros(IxDyn(&[channels])),
            running_var: ArrayD::ones(IxDyn(&[channels])),
            epsilon,
            momentum,
            channels,
        }
    }

    pub fn forward_eval(&self, x: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        let mut out = Array4::<f64>::zeros((batch, h, w, c));
        for ch in 0..c {
            let mean = self.running_mean[[ch]];
            let inv = 1.0 / (self.running_var[[ch]] + self.epsilon).sqrt();
            let g = self.gamma.data[[ch]];
            let b0 = self.beta.data[[ch]];
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        out[[b, i, j, ch]] = g * (x[[b, i, j, ch]] - mean) * inv + b0;
                    }
                }
            }
        }
        out
    }

    /// Batch-statistics forward; updates running statistics in place.
    pub fn forward_train(&mut self, x: &Array4<f64>) -> (Array4<f64>, BatchNormCache) {
        let (batch, h, w, c) = x.dim();
        let n = (batch * h * w) as f64;
        let mut mean = Array1::<f64>::zeros(c);
        let mut var = Array1::<f64>::zeros(c);
        for ch in 0..c {
            let mut s = 0.0;
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        s += x[[b, i, j, ch]];
                    }
                }
            }
            let m = s / n;
            let mut v = 0.0;
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        let d = x[[b, i, j, ch]] - m;
                        v += d * d;
                    }
                }
            }
            mean[ch] = m;
            var[ch] = v / n;
        }
        let mut normalized = Array4::<f64>::zeros((batch, h, w, c));
        let mut out = Array4::<f64>::zeros((batch, h, w, c));
        for ch in 0..c {
            let inv = 1.0 / (var[ch] + self.epsilon).sqrt();
            let g = self.gamma.data[[ch]];
            let b0 = self.beta.data[[ch]];
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        let xn = (x[[b, i, j, ch]] - mean[ch]) * inv;
                        normalized[[b, i, j, ch]] = xn;
                        out[[b, i, j, ch]] = g * xn + b0;
                    }
                }
            }
            self.running_mean[[ch]] =
                self.momentum * self.running_mean[[ch]] + (1.0 - self.momentum) * mean[ch];
            self.running_var[[ch]] =
                self.momentum * self.running_var[[ch]] + (1.0 - self.momentum) * var[ch];
        }
        (
            out,
            BatchNormCache {
                normalized,
                batch_mean: mean,
                batch_var: var,
            },
        )
    }

    /// Standard batch-norm backward for the training-mode forward.
    pub fn backward(&mut self, cache: &BatchNormCache, grad_y: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = grad_y.dim();
        let n = (batch * h * w) as f64;
        let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
        for ch in 0..c {
            let g = self.gamma.data[[ch]];
            let inv = 1.0 / (cache.batch_var[ch] + self.epsilon).sqrt();
            let mut sum_gy = 0.0;
            let mut sum_gy_xn = 0.0;
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        let gy = grad_y[[b, i, j, ch]];
                        sum_gy += gy;
                        sum_gy_xn += gy * cache.normalized[[b, i, j, ch]];
                    }
                }
            }
            for b in 0..batch {
                for i in 0..h {
                    for j in 0..w {
                        let gy = grad_y[[b, i, j, ch]];
                        let xn = cache.normalized[[b, i, j, ch]];
                        grad_x[[b, i, j, ch]] =
                            g * inv / n * (n * gy - sum_gy - xn * sum_gy_xn);
                    }
                }
            }
            {
                let gg = self.gamma.grad_mut();
                gg[[ch]] += sum_gy_xn;
            }
            {
                let gb = self.beta.grad_mut();
                gb[[ch]] += sum_gy;
            }
        }
        grad_x
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&format!("{prefix}.gamma"), &mut self.gamma);
        f(&format!("{prefix}.beta"), &mut self.beta);
    }

    pub fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        f(&format!("{prefix}.running_mean"), &mut self.running_mean);
        f(&format!("{prefix}.running_var"), &mut self.running_var);
    }
}
