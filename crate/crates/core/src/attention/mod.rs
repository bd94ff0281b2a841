//! The two attention blocks applied to backbone features: CBAM (channel +
//! spatial attention) and the channel recalibration gate driven by edge and
//! intensity statistics. All operators preserve the input shape and gate the
//! input multiplicatively with sigmoid weights.

mod cam;
mod crm;
mod edge;
mod sam;
mod stats;

pub use cam::{cam_backward, cam_forward, cam_forward_train, CamCache};
pub use crm::{
    crm_backward, crm_forward, crm_forward_train, crm_gate, crm_gate_backward, crm_gate_train,
    CrmCache, GateCache,
};
pub use edge::{edge_map, edge_map_backward, EdgeCache};
pub use sam::{sam_backward, sam_forward, sam_forward_train, SamCache};
pub use stats::{build_composite, channel_stats, channel_stats_backward, split_composite};

use ndarray::{Array4, ArrayD, IxDyn};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Conv2d, Linear, Param};
use crate::tensor::FeatureMap;

/// Knobs for building [`AttentionParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionConfig {
    /// Dense-bottleneck divisor in channel attention.
    pub cam_reduction_ratio: usize,
    /// Spatial-attention convolution kernel (odd).
    pub sam_kernel_size: usize,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            cam_reduction_ratio: 16,
            sam_kernel_size: 7,
            bn_epsilon: 1e-3,
            bn_momentum: 0.99,
        }
    }
}

/// Learnable state of the attention blocks for one channel width.
///
/// The channel-attention MLPs for the average-pool and max-pool paths are
/// deliberately distinct parameter sets, not shared. The recalibration conv
/// is fixed at kernel size 2 over a 4-wide statistics feature axis.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub channels: usize,
    pub cam_reduction_ratio: usize,
    pub gap_fc1: Linear,
    pub gap_fc2: Linear,
    pub gmp_fc1: Linear,
    pub gmp_fc2: Linear,
    pub sam_conv: Conv2d,
    /// 1-D conv over the channel sequence: (kernel = 2, features = 4) -> 1.
    pub crm_conv_weight: Param, // (2, 4)
    pub crm_conv_bias: Param, // (1,)
    pub crm_bn_gamma: Param,  // (1,)
    pub crm_bn_beta: Param,   // (1,)
    pub crm_bn_running_mean: ArrayD<f64>, // (1,)
    pub crm_bn_running_var: ArrayD<f64>,  // (1,)
    pub crm_bn_epsilon: f64,
    pub crm_bn_momentum: f64,
}

pub const CRM_CONV_KERNEL: usize = 2;

impl AttentionParams {
    pub fn new(channels: usize, cfg: &AttentionConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        if channels == 0 {
            return Err(Error::config("attention channel count must be >= 1"));
        }
        if cfg.cam_reduction_ratio == 0 {
            return Err(Error::config("cam_reduction_ratio must be >= 1"));
        }
        if cfg.sam_kernel_size % 2 == 0 || cfg.sam_kernel_size == 0 {
            return Err(Error::config("sam_kernel_size must be odd and >= 1"));
        }
        let bottleneck = (channels / cfg.cam_reduction_ratio).max(1);
        let k = cfg.sam_kernel_size;
        Ok(AttentionParams {
            channels,
            cam_reduction_ratio: cfg.cam_reduction_ratio,
            gap_fc1: Linear::new(channels, bottleneck, rng),
            gap_fc2: Linear::new(bottleneck, channels, rng),
            gmp_fc1: Linear::new(channels, bottleneck, rng),
            gmp_fc2: Linear::new(bottleneck, channels, rng),
            sam_conv: Conv2d::same(2, 1, (k, k), true, rng),
            crm_conv_weight: Param::new(crate::nn::uniform_fan_in(
                &[CRM_CONV_KERNEL, 4],
                CRM_CONV_KERNEL * 4,
                rng,
            )),
            crm_conv_bias: Param::zeros(&[1]),
            crm_bn_gamma: Param::new(ArrayD::ones(IxDyn(&[1]))),
            crm_bn_beta: Param::zeros(&[1]),
            crm_bn_running_mean: ArrayD::zeros(IxDyn(&[1])),
            crm_bn_running_var: ArrayD::ones(IxDyn(&[1])),
            crm_bn_epsilon: cfg.bn_epsilon,
            crm_bn_momentum: cfg.bn_momentum,
        })
    }

    /// Number of learnable values added by the recalibration block:
    /// conv kernel + bias, plus batch-norm scale and shift.
    pub fn crm_learnable_count(&self) -> usize {
        self.crm_conv_weight.len()
            + self.crm_conv_bias.len()
            + self.crm_bn_gamma.len()
            + self.crm_bn_beta.len()
    }

    /// Batch-norm state values (scale, shift, running mean, running variance).
    pub fn crm_bn_value_count(&self) -> usize {
        self.crm_bn_gamma.len()
            + self.crm_bn_beta.len()
            + self.crm_bn_running_mean.len()
            + self.crm_bn_running_var.len()
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.gap_fc1.visit_params(&format!("{prefix}.cam.gap_fc1"), f);
        self.gap_fc2.visit_params(&format!("{prefix}.cam.gap_fc2"), f);
        self.gmp_fc1.visit_params(&format!("{prefix}.cam.gmp_fc1"), f);
        self.gmp_fc2.visit_params(&format!("{prefix}.cam.gmp_fc2"), f);
        self.sam_conv.visit_params(&format!("{prefix}.sam.conv"), f);
        f(&format!("{prefix}.crm.conv.weight"), &mut self.crm_conv_weight);
        f(&format!("{prefix}.crm.conv.bias"), &mut self.crm_conv_bias);
        f(&format!("{prefix}.crm.bn.gamma"), &mut self.crm_bn_gamma);
        f(&format!("{prefix}.crm.bn.beta"), &mut self.crm_bn_beta);
    }

    pub fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        f(
            &format!("{prefix}.crm.bn.running_mean"),
            &mut self.crm_bn_running_mean,
        );
        f(
            &format!("{prefix}.crm.bn.running_var"),
            &mut self.crm_bn_running_var,
        );
    }

    pub(crate) fn check_channels(&self, f: &FeatureMap) -> Result<()> {
        if f.channels() != self.channels {
            return Err(Error::config(format!(
                "feature map has {} channels but attention parameters were built for {}",
                f.channels(),
                self.channels
            )));
        }
        Ok(())
    }
}

/// CBAM: channel attention followed by spatial attention.
pub fn cbam_forward(f: &FeatureMap, p: &AttentionParams) -> Result<FeatureMap> {
    let after_cam = cam_forward(f, p)?;
    sam_forward(&after_cam, p)
}

/// Training-path CBAM; caches both sub-blocks.
pub fn cbam_forward_train(
    f: &FeatureMap,
    p: &AttentionParams,
) -> Result<(FeatureMap, CamCache, SamCache)> {
    let (after_cam, cam_cache) = cam_forward_train(f, p)?;
    let (out, sam_cache) = sam_forward_train(&after_cam, p)?;
    Ok((out, cam_cache, sam_cache))
}

/// Backward through SAM then CAM, accumulating parameter gradients.
pub fn cbam_backward(
    cam_cache: &CamCache,
    sam_cache: &SamCache,
    grad_out: &Array4<f64>,
    p: &mut AttentionParams,
) -> Array4<f64> {
    let g = sam_backward(sam_cache, grad_out, p);
    cam_backward(cam_cache, &g, p)
}
