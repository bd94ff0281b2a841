use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::attention::AttentionConfig;
use crate::backbone::{BackboneKind, BackboneSpec};
use crate::data::{AugmentConfig, NormalizationMode, PreprocessConfig};
use crate::error::{Error, Result};
use crate::model::AblationMode;
use crate::training::metrics::MetricsAveraging;

/// Every hyperparameter and design knob of a run. Defaults are the training
/// protocol contract; everything is overridable through a flat key=value
/// config file and CLI overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: String,
    pub loss: String,
    pub seed: u64,
    pub metrics_averaging: MetricsAveraging,
    pub k_folds: usize,
    pub backbone: String,
    pub pretrained: bool,
    pub trainable: bool,
    pub stub_channels: usize,
    pub variant: String,
    pub cam_reduction_ratio: usize,
    pub sam_kernel_size: usize,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
    pub normalization: String,
    pub horizontal_flip: bool,
    pub rotation_degrees: f64,
    pub zoom_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            batch_size: 16,
            epochs: 50,
            optimizer: "adam".into(),
            loss: "bce".into(),
            seed: 42,
            metrics_averaging: MetricsAveraging::Macro,
            k_folds: 5,
            backbone: "densenet121".into(),
            pretrained: false,
            trainable: true,
            stub_channels: 16,
            variant: "both".into(),
            cam_reduction_ratio: 16,
            sam_kernel_size: 7,
            bn_epsilon: 1e-3,
            bn_momentum: 0.99,
            normalization: "auto".into(),
            horizontal_flip: true,
            rotation_degrees: 15.0,
            zoom_fraction: 0.10,
        }
    }
}

pub const VALID_KEYS: [&str; 24] = [
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "batch_size",
    "epochs",
    "optimizer",
    "loss",
    "seed",
    "metrics_averaging",
    "k_folds",
    "backbone",
    "pretrained",
    "trainable",
    "stub_channels",
    "variant",
    "cam_reduction_ratio",
    "sam_kernel_size",
    "bn_epsilon",
    "bn_momentum",
    "normalization",
    "horizontal_flip",
    "rotation_degrees",
    "zoom_fraction",
];

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "learning_rate" => self.learning_rate = parse_f64(key, v)?,
            "beta1" => self.beta1 = parse_f64(key, v)?,
            "beta2" => self.beta2 = parse_f64(key, v)?,
            "epsilon" => self.epsilon = parse_f64(key, v)?,
            "batch_size" => self.batch_size = parse_usize(key, v)?,
            "epochs" => self.epochs = parse_usize(key, v)?,
            "optimizer" => self.optimizer = v.to_string(),
            "loss" => self.loss = v.to_string(),
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::config(format!("bad value for {key}: '{v}'")))?
            }
            "metrics_averaging" => self.metrics_averaging = MetricsAveraging::parse(v)?,
            "k_folds" => self.k_folds = parse_usize(key, v)?,
            "backbone" => self.backbone = v.to_string(),
            "pretrained" => self.pretrained = parse_bool(key, v)?,
            "trainable" => self.trainable = parse_bool(key, v)?,
            "stub_channels" => self.stub_channels = parse_usize(key, v)?,
            "variant" => self.variant = v.to_string(),
            "cam_reduction_ratio" => self.cam_reduction_ratio = parse_usize(key, v)?,
            "sam_kernel_size" => self.sam_kernel_size = parse_usize(key, v)?,
            "bn_epsilon" => self.bn_epsilon = parse_f64(key, v)?,
            "bn_momentum" => self.bn_momentum = parse_f64(key, v)?,
            "normalization" => self.normalization = v.to_string(),
            "horizontal_flip" => self.horizontal_flip = parse_bool(key, v)?,
            "rotation_degrees" => self.rotation_degrees = parse_f64(key, v)?,
            "zoom_fraction" => self.zoom_fraction = parse_f64(key, v)?,
            other => {
                return Err(Error::config(format!(
                    "unknown config key '{other}'; valid keys: {}",
                    VALID_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        cfg.merge_file(path)?;
        Ok(cfg)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "{} line {}: expected 'key = value'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Applies `key=value` override pairs (highest precedence).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for pair in overrides {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::config(format!("override '{pair}' is not of the form key=value"))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.optimizer != "adam" {
            return Err(Error::config(format!(
                "optimizer must be 'adam', got '{}'",
                self.optimizer
            )));
        }
        if self.loss != "bce" {
            return Err(Error::config(format!(
                "loss must be 'bce', got '{}'",
                self.loss
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.k_folds < 2 {
            return Err(Error::config("k_folds must be >= 2"));
        }
        self.ablation_mode()?;
        self.backbone_spec()?;
        if self.normalization != "auto" {
            NormalizationMode::parse(&self.normalization)?;
        }
        Ok(())
    }

    /// One line per key in a fixed order; the hashing and serialization form.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "beta1 = {}", self.beta1);
        let _ = writeln!(s, "beta2 = {}", self.beta2);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "optimizer = {}", self.optimizer);
        let _ = writeln!(s, "loss = {}", self.loss);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "metrics_averaging = {}", self.metrics_averaging.name());
        let _ = writeln!(s, "k_folds = {}", self.k_folds);
        let _ = writeln!(s, "backbone = {}", self.backbone);
        let _ = writeln!(s, "pretrained = {}", self.pretrained);
        let _ = writeln!(s, "trainable = {}", self.trainable);
        let _ = writeln!(s, "stub_channels = {}", self.stub_channels);
        let _ = writeln!(s, "variant = {}", self.variant);
        let _ = writeln!(s, "cam_reduction_ratio = {}", self.cam_reduction_ratio);
        let _ = writeln!(s, "sam_kernel_size = {}", self.sam_kernel_size);
        let _ = writeln!(s, "bn_epsilon = {}", self.bn_epsilon);
        let _ = writeln!(s, "bn_momentum = {}", self.bn_momentum);
        let _ = writeln!(s, "normalization = {}", self.normalization);
        let _ = writeln!(s, "horizontal_flip = {}", self.horizontal_flip);
        let _ = writeln!(s, "rotation_degrees = {}", self.rotation_degrees);
        let _ = writeln!(s, "zoom_fraction = {}", self.zoom_fraction);
        s
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        fs::write(path, self.canonical_string()).map_err(|e| Error::io(path, e))
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }

    pub fn backbone_spec(&self) -> Result<BackboneSpec> {
        let kind = BackboneKind::parse(&self.backbone)?;
        Ok(BackboneSpec {
            name: self.backbone.clone(),
            pretrained: self.pretrained,
            output_channels: kind.fixed_channels().unwrap_or(self.stub_channels),
            trainable: self.trainable,
        })
    }

    pub fn attention_config(&self) -> AttentionConfig {
        AttentionConfig {
            cam_reduction_ratio: self.cam_reduction_ratio,
            sam_kernel_size: self.sam_kernel_size,
            bn_epsilon: self.bn_epsilon,
            bn_momentum: self.bn_momentum,
        }
    }

    pub fn ablation_mode(&self) -> Result<AblationMode> {
        AblationMode::parse(&self.variant)
    }

    pub fn normalization_mode(&self) -> Result<NormalizationMode> {
        if self.normalization == "auto" {
            Ok(NormalizationMode::default_for(BackboneKind::parse(
                &self.backbone,
            )?))
        } else {
            NormalizationMode::parse(&self.normalization)
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            horizontal_flip: self.horizontal_flip,
            rotation_degrees: self.rotation_degrees,
            zoom_fraction: self.zoom_fraction,
        }
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        Ok(PreprocessConfig {
            normalization: self.normalization_mode()?,
            augment: self.augment_config(),
        })
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::config(format!("bad value for {key}: '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::config(format!("bad value for {key}: '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("bad value for {key}: '{v}'"))),
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
