use ndarray::{Array2, Array4, Ix1, Ix2};
use rand_chacha::ChaCha8Rng;

use super::init::uniform_fan_in;
use super::param::Param;

/// 2-D convolution over channels-last tensors (B, H, W, C).
///
/// Symmetric zero padding, arbitrary (possibly non-square) kernel and stride.
/// Implemented as im2col + one GEMM per batch so the matrix multiply carries
/// the heavy load.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Param,       // (kh, kw, c_in, c_out) flattened to (kh*kw*c_in, c_out)
    pub bias: Option<Param>, // (c_out,)
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        with_bias: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let fan_in = kernel.0 * kernel.1 * in_channels;
        Conv2d {
            weight: Param::new(uniform_fan_in(&[fan_in, out_channels], fan_in, rng)),
            bias: if with_bias {
                Some(Param::zeros(&[out_channels]))
            } else {
                None
            },
            kernel,
            stride,
            padding,
            in_channels,
            out_channels,
        }
    }

    /// Stride-1 convolution padded so the output spatial size equals the
    /// input size. Requires odd kernel dims.
    pub fn same(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        with_bias: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        debug_assert!(kernel.0 % 2 == 1 && kernel.1 % 2 == 1);
        Conv2d::new(
            in_channels,
            out_channels,
            kernel,
            (1, 1),
            ((kernel.0 - 1) / 2, (kernel.1 - 1) / 2),
            with_bias,
            rng,
        )
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        conv_output_hw(h, w, self.kernel, self.stride, self.padding)
    }

    /// im2col patch matrix for one batch item: (oh*ow, kh*kw*c_in).
    fn patches(&self, x: &Array4<f64>, b: usize, oh: usize, ow: usize) -> Array2<f64> {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        let (_, h, w, c) = x.dim();
        let mut m = Array2::<f64>::zeros((oh * ow, kh * kw * c));
        for oy in 0..oh {
            for ox in 0..ow {
                let row = oy * ow + ox;
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy as usize >= h {
                        continue; // zero padding
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix < 0 || ix as usize >= w {
                            continue;
                        }
                        let col0 = (ky * kw + kx) * c;
                        for ch in 0..c {
                            m[[row, col0 + ch]] = x[[b, iy as usize, ix as usize, ch]];
                        }
                    }
                }
            }
        }
        m
    }

    pub fn forward(&self, x: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        debug_assert_eq!(c, self.in_channels);
        let (oh, ow) = self.output_hw(h, w);
        let wmat = self
            .weight
            .data
            .view()
            .into_dimensionality::<Ix2>()
            .expect("conv weight is 2-d");
        let mut out = Array4::<f64>::zeros((batch, oh, ow, self.out_channels));
        for b in 0..batch {
            let patches = self.patches(x, b, oh, ow);
            let mut y = patches.dot(&wmat); // (oh*ow, c_out)
            if let Some(bias) = &self.bias {
                let bv = bias
                    .data
                    .view()
                    .into_dimensionality::<Ix1>()
                    .expect("conv bias is 1-d");
                y += &bv;
            }
            for oy in 0..oh {
                for ox in 0..ow {
                    let row = oy * ow + ox;
                    for oc in 0..self.out_channels {
                        out[[b, oy, ox, oc]] = y[[row, oc]];
                    }
                }
            }
        }
        out
    }

    /// Backward pass; accumulates weight/bias gradients and returns grad wrt x.
    pub fn backward(&mut self, x: &Array4<f64>, grad_y: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        let (_, oh, ow, oc) = grad_y.dim();
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;

        let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
        let mut grad_w = Array2::<f64>::zeros((kh * kw * c, oc));
        let mut grad_b = vec![0.0; oc];

        let wmat = self
            .weight
            .data
            .view()
            .into_dimensionality::<Ix2>()
            .expect("conv weight is 2-d")
            .to_owned();

        for b in 0..batch {
            // (oh*ow, oc) view of the upstream gradient
            let mut gy = Array2::<f64>::zeros((oh * ow, oc));
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..oc {
                        gy[[oy * ow + ox, ch]] = grad_y[[b, oy, ox, ch]];
                    }
                }
            }
            let patches = self.patches(x, b, oh, ow);
            grad_w += &patches.t().dot(&gy);
            for row in gy.rows() {
                for (ch, g) in row.iter().enumerate() {
                    grad_b[ch] += g;
                }
            }
            // col2im: scatter patch gradients back through the padding
            let gp = gy.dot(&wmat.t()); // (oh*ow, kh*kw*c)
            for oy in 0..oh {
                for ox in 0..ow {
                    let row = oy * ow + ox;
                    for ky in 0..kh {
                        let iy = (oy * sh + ky) as isize - ph as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * sw + kx) as isize - pw as isize;
                            if ix < 0 || ix as usize >= w {
                                continue;
                            }
                            let col0 = (ky * kw + kx) * c;
                            for ch in 0..c {
                                grad_x[[b, iy as usize, ix as usize, ch]] += gp[[row, col0 + ch]];
                            }
                        }
                    }
                }
            }
        }

        {
            let mut acc = self
                .weight
                .grad_mut()
                .view_mut()
                .into_dimensionality::<Ix2>()
                .expect("conv weight grad is 2-d");
            acc += &grad_w;
        }
        if let Some(bias) = &mut self.bias {
            let g = bias.grad_mut();
            for (acc, gb) in g.iter_mut().zip(grad_b.iter()) {
                *acc += gb;
            }
        }
        grad_x
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&format!("{prefix}.weight"), &mut self.weight);
        if let Some(b) = &mut self.bias {
            f(&format!("{prefix}.bias"), b);
        }
    }
}

/// Depthwise 3x3-style convolution: one spatial filter per channel.
#[derive(Debug, Clone)]
pub struct DepthwiseConv2d {
    pub weight: Param, // (kh, kw, c)
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub channels: usize,
}

impl DepthwiseConv2d {
    pub fn new(
        channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let fan_in = kernel.0 * kernel.1;
        DepthwiseConv2d {
            weight: Param::new(uniform_fan_in(&[kernel.0, kernel.1, channels], fan_in, rng)),
            kernel,
            stride,
            padding,
            channels,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        conv_output_hw(h, w, self.kernel, self.stride, self.padding)
    }

    pub fn forward(&self, x: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        debug_assert_eq!(c, self.channels);
        let (oh, ow) = self.output_hw(h, w);
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        let wt = &self.weight.data;
        let mut out = Array4::<f64>::zeros((batch, oh, ow, c));
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ky in 0..kh {
                        let iy = (oy * sh + ky) as isize - ph as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * sw + kx) as isize - pw as isize;
                            if ix < 0 || ix as usize >= w {
                                continue;
                            }
                            for ch in 0..c {
                                out[[b, oy, ox, ch]] +=
                                    wt[[ky, kx, ch]] * x[[b, iy as usize, ix as usize, ch]];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn backward(&mut self, x: &Array4<f64>, grad_y: &Array4<f64>) -> Array4<f64> {
        let (batch, h, w, c) = x.dim();
        let (_, oh, ow, _) = grad_y.dim();
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
        let mut grad_w = ndarray::Array3::<f64>::zeros((kh, kw, c));
        let wt = self.weight.data.clone();
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ky in 0..kh {
                        let iy = (oy * sh + ky) as isize - ph as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * sw + kx) as isize - pw as isize;
                            if ix < 0 || ix as usize >= w {
                                continue;
                            }
                            for ch in 0..c {
                                let g = grad_y[[b, oy, ox, ch]];
                                grad_w[[ky, kx, ch]] += g * x[[b, iy as usize, ix as usize, ch]];
                                grad_x[[b, iy as usize, ix as usize, ch]] += g * wt[[ky, kx, ch]];
                            }
                        }
                    }
                }
            }
        }
        let mut acc = self
            .weight
            .grad_mut()
            .view_mut()
            .into_dimensionality::<ndarray::Ix3>()
            .expect("depthwise weight grad is 3-d");
        acc += &grad_w;
        grad_x
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&format!("{prefix}.weight"), &mut self.weight);
    }
}

pub fn conv_output_hw(
    h: usize,
    w: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
) -> (usize, usize) {
    let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
    let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
    (oh, ow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn output_shape_arithmetic() {
        // 7x7 stride-2 pad-3 halves 256, as in common stem layers
        assert_eq!(conv_output_hw(256, 256, (7, 7), (2, 2), (3, 3)), (128, 128));
        assert_eq!(conv_output_hw(29, 29, (3, 3), (2, 2), (0, 0)), (14, 14));
        assert_eq!(conv_output_hw(5, 5, (1, 7), (1, 1), (0, 3)), (5, 5));
    }

    #[test]
    fn conv_matches_direct_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let conv = Conv2d::new(2, 3, (3, 3), (1, 1), (1, 1), true, &mut rng);
        let x = Array4::from_shape_fn((1, 4, 5, 2), |(_, i, j, c)| {
            (i as f64 - j as f64) * 0.3 + c as f64 * 0.1
        });
        let y = conv.forward(&x);
        // direct quadruple loop
        let wmat = conv.weight.data.view().into_dimensionality::<Ix2>().unwrap();
        for oy in 0..4 {
            for ox in 0..5 {
                for oc in 0..3 {
                    let mut acc = conv.bias.as_ref().unwrap().data[[oc]];
                    for ky in 0..3usize {
                        for kx in 0..3usize {
                            let iy = oy as isize + ky as isize - 1;
                            let ix = ox as isize + kx as isize - 1;
                            if iy < 0 || iy >= 4 || ix < 0 || ix >= 5 {
                                continue;
                            }
                            for ic in 0..2 {
                                acc += wmat[[(ky * 3 + kx) * 2 + ic, oc]]
                                    * x[[0, iy as usize, ix as usize, ic]];
                            }
                        }
                    }
                    assert!((y[[0, oy, ox, oc]] - acc).abs() < 1e-12);
                }
            }
        }
    }
}
