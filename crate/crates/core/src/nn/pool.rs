use ndarray::{Array2, Array4};

use super::conv::conv_output_hw;

/// Max pooling; the cache records the winning input index per output cell so
/// backward can route gradients to the argmax.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    pub argmax: Vec<(usize, usize)>, // (iy, ix) per (b, oy, ox, c) in row-major order
    pub input_dim: (usize, usize, usize, usize),
    pub output_dim: (usize, usize, usize, usize),
}

impl MaxPool2d {
    pub fn new(kernel: (usize, usize), stride: (usize, usize), padding: (usize, usize)) -> Self {
        MaxPool2d {
            kernel,
            stride,
            padding,
        }
    }

    pub fn forward(&self, x: &Array4<f64>) -> Array4<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &Array4<f64>) -> (Array4<f64>, MaxPoolCache) {
        let (batch, h, w, c) = x.dim();
        let (oh, ow) = conv_output_hw(h, w, self.kernel, self.stride, self.padding);
        let mut out = Array4::<f64>::zeros((batch, oh, ow, c));
        let mut argmax = vec![(0usize, 0usize); batch * oh * ow * c];
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_pos = (0usize, 0usize);
                        for ky in 0..self.kernel.0 {
                            let iy = (oy * self.stride.0 + ky) as isize - self.padding.0 as isize;
                            if iy < 0 || iy as usize >= h {
                                continue; // padded cells never win
                            }
                            for kx in 0..self.kernel.1 {
                                let ix =
                                    (ox * self.stride.1 + kx) as isize - self.padding.1 as isize;
                                if ix < 0 || ix as usize >= w {
                                    continue;
                                }
                                let v = x[[b, iy as usize, ix as usize, ch]];
                                if v > best {
                                    best = v;
                                    best_pos = (iy as usize, ix as usize);
                                }
                            }
                        }
                        out[[b, oy, ox, ch]] = best;
                        argmax[((b * oh + oy) * ow + ox) * c + ch] = best_pos;
                    }
                }
            }
        }
        (
            out,
            MaxPoolCache {
                argmax,
                input_dim: (batch, h, w, c),
                output_dim: (batch, oh, ow, c),
            },
        )
    }

    pub fn backward(&self, cache: &MaxPoolCache, grad_y: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = cache.input_dim;
        let (_, oh, ow, _) = cache.output_dim;
        let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let (iy, ix) = cache.argmax[((b * oh + oy) * ow + ox) * c + ch];
                        grad_x[[b, iy, ix, ch]] += grad_y[[b, oy, ox, ch]];
                    }
                }
            }
        }
        grad_x
    }
}

/// Average pooling. Padded cells count toward the divisor (kernel area is the
/// constant denominator), which keeps forward and backward exactly adjoint.
#[derive(Debug, Clone)]
pub struct AvgPool2d {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl AvgPool2d {
    pub fn new(kernel: (usize, usize), stride: (usize, usize), padding: (usize, usize)) -> Self {
        AvgPool2d {
            kernel,
            stride,
            padding,
        }
    }

    pub fn forward(&self, x: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        let (oh, ow) = conv_output_hw(h, w, self.kernel, self.stride, self.padding);
        let area = (self.kernel.0 * self.kernel.1) as f64;
        let mut out = Array4::<f64>::zeros((batch, oh, ow, c));
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut s = 0.0;
                        for ky in 0..self.kernel.0 {
                            let iy = (oy * self.stride.0 + ky) as isize - self.padding.0 as isize;
                            if iy < 0 || iy as usize >= h {
                                continue;
                            }
                            for kx in 0..self.kernel.1 {
                                let ix =
                                    (ox * self.stride.1 + kx) as isize - self.padding.1 as isize;
                                if ix < 0 || ix as usize >= w {
                                    continue;
                                }
                                s += x[[b, iy as usize, ix as usize, ch]];
                            }
                        }
                        out[[b, oy, ox, ch]] = s / area;
                    }
                }
            }
        }
        out
    }

    pub fn backward(
        &self,
        input_dim: (usize, usize, usize, usize),
        grad_y: &Array4<f64>,
    ) -> Array4<f64> {
        let (batch, h, w, c) = input_dim;
        let (_, oh, ow, _) = grad_y.dim();
        let area = (self.kernel.0 * self.kernel.1) as f64;
        let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let g = grad_y[[b, oy, ox, ch]] / area;
                        for ky in 0..self.kernel.0 {
                            let iy = (oy * self.stride.0 + ky) as isize - self.padding.0 as isize;
                            if iy < 0 || iy as usize >= h {
                                continue;
                            }
                            for kx in 0..self.kernel.1 {
                                let ix =
                                    (ox * self.stride.1 + kx) as isize - self.padding.1 as isize;
                                if ix < 0 || ix as usize >= w {
                                    continue;
                                }
                                grad_x[[b, iy as usize, ix as usize, ch]] += g;
                            }
                        }
                    }
                }
            }
        }
        grad_x
    }
}

/// Global average pooling (B, H, W, C) -> (B, C).
pub fn global_avg_pool(x: &Array4<f64>) -> Array2<f64> {
    let (batch, h, w, c) = x.dim();
    let n = (h * w) as f64;
    let mut out = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    out[[b, ch]] += x[[b, i, j, ch]];
                }
            }
        }
    }
    out.mapv_inplace(|v| v / n);
    out
}

/// Gradient of `global_avg_pool`: spreads each (b, c) gradient uniformly.
pub fn global_avg_pool_backward(
    input_dim: (usize, usize, usize, usize),
    grad_y: &Array2<f64>,
) -> Array4<f64> {
    let (batch, h, w, c) = input_dim;
    let n = (h * w) as f64;
    let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    grad_x[[b, i, j, ch]] = grad_y[[b, ch]] / n;
                }
            }
        }
    }
    grad_x
}

/// Global max pooling; returns the pooled values and the (h, w) argmax per
/// (b, c) for gradient routing.
pub fn global_max_pool(x: &Array4<f64>) -> (Array2<f64>, Vec<(usize, usize)>) {
    let (batch, h, w, c) = x.dim();
    let mut out = Array2::<f64>::zeros((batch, c));
    let mut argmax = vec![(0usize, 0usize); batch * c];
    for b in 0..batch {
        for ch in 0..c {
            let mut best = f64::NEG_INFINITY;
            let mut pos = (0usize, 0usize);
            for i in 0..h {
                for j in 0..w {
                    let v = x[[b, i, j, ch]];
                    if v > best {
                        best = v;
                        pos = (i, j);
                    }
                }
            }
            out[[b, ch]] = best;
            argmax[b * c + ch] = pos;
        }
    }
    (out, argmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_pools_on_known_values() {
        let x = Array4::from_shape_fn((1, 2, 2, 1), |(_, i, j, _)| (i * 2 + j) as f64 + 1.0);
        let gap = global_avg_pool(&x);
        assert!((gap[[0, 0]] - 2.5).abs() < 1e-12);
        let (gmp, arg) = global_max_pool(&x);
        assert_eq!(gmp[[0, 0]], 4.0);
        assert_eq!(arg[0], (1, 1));
    }

    #[test]
    fn maxpool_routes_gradient_to_argmax() {
        let x = Array4::from_shape_fn((1, 2, 2, 1), |(_, i, j, _)| (i * 2 + j) as f64);
        let pool = MaxPool2d::new((2, 2), (2, 2), (0, 0));
        let (y, cache) = pool.forward_cached(&x);
        assert_eq!(y[[0, 0, 0, 0]], 3.0);
        let gy = Array4::from_elem((1, 1, 1, 1), 5.0);
        let gx = pool.backward(&cache, &gy);
        assert_eq!(gx[[0, 1, 1, 0]], 5.0);
        assert_eq!(gx[[0, 0, 0, 0]], 0.0);
    }
}
