//! The full classifier: backbone features, refined by CBAM then the channel
//! recalibration gate, pooled and squashed to one glaucoma probability.

use ndarray::{Array1, Array2, Array4, ArrayD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attention::{
    cam_backward, cbam_forward, cbam_forward_train, crm_backward, crm_forward, crm_forward_train,
    sam_backward, AttentionConfig, AttentionParams, CamCache, CrmCache, SamCache,
};
use crate::backbone::{Backbone, BackboneSpec};
use crate::error::{Error, Result};
use crate::nn::activation::{sigmoid, sigmoid_grad_from_output};
use crate::nn::pool::{global_avg_pool, global_avg_pool_backward};
use crate::nn::{derive_seed, Linear, Param};
use crate::tensor::FeatureMap;

pub const INPUT_HEIGHT: usize = 256;
pub const INPUT_WIDTH: usize = 256;
pub const INPUT_CHANNELS: usize = 3;

/// Which attention blocks sit between the backbone and the pooled head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationMode {
    Baseline,
    CbamOnly,
    CrmOnly,
    Both,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Baseline,
        AblationMode::CbamOnly,
        AblationMode::CrmOnly,
        AblationMode::Both,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "baseline" => Ok(AblationMode::Baseline),
            "cbam" | "cbam_only" => Ok(AblationMode::CbamOnly),
            "crm" | "crm_only" => Ok(AblationMode::CrmOnly),
            "both" => Ok(AblationMode::Both),
            other => Err(Error::config(format!(
                "unknown ablation mode '{other}'; expected baseline, cbam, crm or both"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AblationMode::Baseline => "baseline",
            AblationMode::CbamOnly => "cbam",
            AblationMode::CrmOnly => "crm",
            AblationMode::Both => "both",
        }
    }

    pub fn uses_cbam(&self) -> bool {
        matches!(self, AblationMode::CbamOnly | AblationMode::Both)
    }

    pub fn uses_crm(&self) -> bool {
        matches!(self, AblationMode::CrmOnly | AblationMode::Both)
    }

    pub fn label(&self) -> &'static str {
        match self {
            AblationMode::Baseline => "baseline",
            AblationMode::CbamOnly => "baseline+cbam",
            AblationMode::CrmOnly => "baseline+crm",
            AblationMode::Both => "baseline+cbam+crm",
        }
    }
}

#[derive(Clone)]
pub struct ClassifierModel {
    pub backbone: Backbone,
    pub attention: AttentionParams,
    pub head: Linear,
    pub mode: AblationMode,
    pub seed: u64,
}

/// Builds the classifier with seeded initialization. Two builds from the same
/// spec and seed are bit-identical.
pub fn build_model(
    spec: &BackboneSpec,
    attention_cfg: &AttentionConfig,
    seed: u64,
) -> Result<ClassifierModel> {
    let backbone = Backbone::build(spec, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x61746e68]));
    let attention = AttentionParams::new(spec.output_channels, attention_cfg, &mut rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x68656164]));
    let head = Linear::new(spec.output_channels, 1, &mut rng);
    Ok(ClassifierModel {
        backbone,
        attention,
        head,
        mode: AblationMode::Both,
        seed,
    })
}

/// Same weights, different forward path: only the selected attention blocks
/// run between backbone and head.
pub fn ablation_variant(model: &ClassifierModel, mode: AblationMode) -> ClassifierModel {
    let mut m = model.clone();
    m.mode = mode;
    m
}

impl ClassifierModel {
    pub fn input_shape_error(dim: (usize, usize, usize, usize)) -> Error {
        Error::validation(format!(
            "expected images of shape (B, {INPUT_HEIGHT}, {INPUT_WIDTH}, {INPUT_CHANNELS}), got {:?}",
            dim
        ))
    }

    fn validate_images(images: &Array4<f64>) -> Result<()> {
        let (b, h, w, c) = images.dim();
        if b == 0 || h != INPUT_HEIGHT || w != INPUT_WIDTH || c != INPUT_CHANNELS {
            return Err(Self::input_shape_error(images.dim()));
        }
        if !images.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("images contain non-finite values"));
        }
        Ok(())
    }

    /// Pure forward pass producing one probability per batch item, strictly
    /// inside (0, 1). `training_mode` selects batch statistics inside the
    /// recalibration gate; no state is mutated either way (the training loop
    /// uses [`ClassifierModel::train_forward`]).
    pub fn forward(&self, images: &Array4<f64>, training_mode: bool) -> Result<Array1<f64>> {
        Self::validate_images(images)?;
        let f_enc = FeatureMap::new(self.backbone.forward_eval(images))?;
        let refined = self.apply_attention(&f_enc, training_mode)?;
        Ok(self.head_forward(refined.data()))
    }

    fn apply_attention(&self, f_enc: &FeatureMap, training_mode: bool) -> Result<FeatureMap> {
        let mut cur = f_enc.clone();
        if self.mode.uses_cbam() {
            cur = cbam_forward(&cur, &self.attention)?;
        }
        if self.mode.uses_crm() {
            cur = crm_forward(&cur, &self.attention, training_mode)?;
        }
        Ok(cur)
    }

    /// Attention output feeding the pooled head; the tensor visualized by the
    /// explanation heatmap.
    pub fn attention_output(&self, images: &Array4<f64>) -> Result<FeatureMap> {
        Self::validate_images(images)?;
        let f_enc = FeatureMap::new(self.backbone.forward_eval(images))?;
        self.apply_attention(&f_enc, false)
    }

    fn head_forward(&self, refined: &Array4<f64>) -> Array1<f64> {
        let pooled = global_avg_pool(refined);
        let logits = self.head.forward(&pooled); // (B, 1)
        Array1::from_iter(logits.column(0).iter().map(|&z| sigmoid(z)))
    }

    /// Training forward: caches every intermediate needed by
    /// [`ClassifierModel::backward`] and updates batch-norm running state.
    pub fn train_forward(&mut self, images: &Array4<f64>) -> Result<(Array1<f64>, ModelCache)> {
        Self::validate_images(images)?;
        let f_enc = FeatureMap::new(self.backbone.forward_train(images))?;
        let mut cur = f_enc.clone();
        let mut cbam_cache = None;
        if self.mode.uses_cbam() {
            let (out, cam_c, sam_c) = cbam_forward_train(&cur, &self.attention)?;
            cbam_cache = Some((cam_c, sam_c));
            cur = out;
        }
        let mut crm_cache = None;
        if self.mode.uses_crm() {
            let (out, c) = crm_forward_train(&cur, &mut self.attention)?;
            crm_cache = Some(c);
            cur = out;
        }
        let refined = cur.into_inner();
        let pooled = global_avg_pool(&refined);
        let logits = self.head.forward(&pooled);
        let probs = Array1::from_iter(logits.column(0).iter().map(|&z| sigmoid(z)));
        Ok((
            probs.clone(),
            ModelCache {
                refined_dim: refined.dim(),
                pooled,
                probs,
                cbam_cache,
                crm_cache,
            },
        ))
    }

    /// Backward from a gradient on the output probabilities. Accumulates into
    /// every parameter on the active path.
    pub fn backward(&mut self, cache: &ModelCache, grad_probs: &Array1<f64>) {
        let batch = grad_probs.len();
        let mut grad_logits = Array2::<f64>::zeros((batch, 1));
        for b in 0..batch {
            grad_logits[[b, 0]] = grad_probs[b] * sigmoid_grad_from_output(cache.probs[b]);
        }
        let grad_pooled = self.head.backward(&cache.pooled, &grad_logits);
        let mut grad = global_avg_pool_backward(cache.refined_dim, &grad_pooled);
        if let Some(crm_cache) = &cache.crm_cache {
            grad = crm_backward(crm_cache, &grad, &mut self.attention);
        }
        if let Some((cam_cache, sam_cache)) = &cache.cbam_cache {
            grad = sam_backward(sam_cache, &grad, &mut self.attention);
            grad = cam_backward(cam_cache, &grad, &mut self.attention);
        }
        self.backbone.backward(&grad);
    }

    /// Every parameter in the model, in a stable named order.
    pub fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Param)) {
        self.backbone.visit_params("backbone", f);
        self.attention.visit_params("attention", f);
        self.head.visit_params("head", f);
    }

    /// Parameters the optimizer may update: honors a frozen backbone.
    pub fn visit_trainable_params(&mut self, f: &mut dyn FnMut(&str, &mut Param)) {
        if self.backbone.spec.trainable {
            self.backbone.visit_params("backbone", f);
        }
        self.attention.visit_params("attention", f);
        self.head.visit_params("head", f);
    }

    /// Mutable state outside the parameter set (batch-norm running stats).
    pub fn visit_state(&mut self, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        self.backbone.visit_state("backbone", f);
        self.attention.visit_state("attention", f);
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(&mut |_, p| p.zero_grad());
    }
}

pub struct ModelCache {
    refined_dim: (usize, usize, usize, usize),
    pooled: Array2<f64>,
    probs: Array1<f64>,
    cbam_cache: Option<(CamCache, SamCache)>,
    crm_cache: Option<CrmCache>,
}
