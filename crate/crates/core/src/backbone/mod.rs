//! Pluggable feature extractors. Each backbone maps (B, 256, 256, 3) images
//! to a final feature map whose channel count is fixed by the architecture.

mod blocks;
mod common;
mod densenet;
mod inception;
mod mobilenet;
mod resnet;
mod stub;

pub use blocks::{DenseBlock, ParallelConcat, ResidualAdd};

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use ndarray::{Array3, Array4, ArrayD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{derive_seed, Layer, Param, Sequential};
use crate::tensorio;

/// Environment variable pointing at the pretrained-weights cache directory.
pub const WEIGHTS_DIR_ENV: &str = "FUNDUSNET_WEIGHTS_DIR";
const WEIGHTS_MAGIC: &[u8; 8] = b"FNWTS001";

/// Identifier, weight policy and declared channel width of a backbone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneSpec {
    pub name: String,
    pub pretrained: bool,
    pub output_channels: usize,
    pub trainable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackboneKind {
    DenseNet121,
    MobileNetV2,
    ResNet50,
    InceptionV3,
    /// Reduced net for CPU-scale runs; channel width is caller-chosen.
    Stub,
}

impl BackboneKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "densenet121" => Ok(BackboneKind::DenseNet121),
            "mobilenetv2" => Ok(BackboneKind::MobileNetV2),
            "resnet50" => Ok(BackboneKind::ResNet50),
            "inceptionv3" => Ok(BackboneKind::InceptionV3),
            "stub" => Ok(BackboneKind::Stub),
            other => Err(Error::config(format!(
                "unknown backbone '{other}'; expected one of \
                 densenet121, mobilenetv2, resnet50, inceptionv3, stub"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackboneKind::DenseNet121 => "densenet121",
            BackboneKind::MobileNetV2 => "mobilenetv2",
            BackboneKind::ResNet50 => "resnet50",
            BackboneKind::InceptionV3 => "inceptionv3",
            BackboneKind::Stub => "stub",
        }
    }

    /// Final feature-map channel count fixed by the published architecture;
    /// `None` for the stub, whose width is free.
    pub fn fixed_channels(&self) -> Option<usize> {
        match self {
            BackboneKind::DenseNet121 => Some(1024),
            BackboneKind::MobileNetV2 => Some(1280),
            BackboneKind::ResNet50 => Some(2048),
            BackboneKind::InceptionV3 => Some(2048),
            BackboneKind::Stub => None,
        }
    }
}

impl BackboneSpec {
    /// Spec for a named architecture with its canonical channel width,
    /// random initialization, all layers trainable.
    pub fn named(name: &str) -> Result<Self> {
        let kind = BackboneKind::parse(name)?;
        Ok(BackboneSpec {
            name: name.to_string(),
            pretrained: false,
            output_channels: kind.fixed_channels().unwrap_or(16),
            trainable: true,
        })
    }

    pub fn kind(&self) -> Result<BackboneKind> {
        let kind = BackboneKind::parse(&self.name)?;
        if let Some(fixed) = kind.fixed_channels() {
            if self.output_channels != fixed {
                return Err(Error::config(format!(
                    "backbone '{}' produces {fixed} channels, spec says {}",
                    self.name, self.output_channels
                )));
            }
        } else if self.output_channels == 0 {
            return Err(Error::config("stub backbone needs output_channels >= 1"));
        }
        Ok(kind)
    }
}

#[derive(Clone)]
enum BackboneNet {
    Graph(Sequential),
    /// Emits a fixed per-item feature map regardless of the input; test and
    /// oracle hook.
    Fixed(Array3<f64>),
}

#[derive(Clone)]
pub struct Backbone {
    pub spec: BackboneSpec,
    net: BackboneNet,
}

impl Backbone {
    /// Builds the named architecture with seeded initialization, loading
    /// weights from the cache directory when `pretrained` is set. A missing
    /// weight file is a hard error: silent random initialization would
    /// masquerade as transfer learning.
    pub fn build(spec: &BackboneSpec, seed: u64) -> Result<Self> {
        let kind = spec.kind()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6261636b]));
        let net = match kind {
            BackboneKind::DenseNet121 => densenet::build(&mut rng),
            BackboneKind::MobileNetV2 => mobilenet::build(&mut rng),
            BackboneKind::ResNet50 => resnet::build(&mut rng),
            BackboneKind::InceptionV3 => inception::build(&mut rng),
            BackboneKind::Stub => stub::build(spec.output_channels, &mut rng),
        };
        let mut backbone = Backbone {
            spec: spec.clone(),
            net: BackboneNet::Graph(net),
        };
        if spec.pretrained {
            backbone.load_pretrained()?;
        }
        Ok(backbone)
    }

    /// Test backbone emitting `template` for every batch item.
    pub fn fixed(template: Array3<f64>) -> Self {
        let channels = template.dim().2;
        Backbone {
            spec: BackboneSpec {
                name: "fixed".to_string(),
                pretrained: false,
                output_channels: channels,
                trainable: false,
            },
            net: BackboneNet::Fixed(template),
        }
    }

    pub fn weights_dir() -> PathBuf {
        std::env::var_os(WEIGHTS_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("weights"))
    }

    fn load_pretrained(&mut self) -> Result<()> {
        let dir = Self::weights_dir();
        let path = dir.join(format!("{}.weights", self.spec.name));
        if !path.is_file() {
            return Err(Error::PretrainedWeightsUnavailable {
                backbone: self.spec.name.clone(),
                search_dir: dir,
                env_var: WEIGHTS_DIR_ENV,
            });
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = BufReader::new(file);
        let mut magic = [0u8; 8];
        tensorio::read_exact(&mut reader, &mut magic)?;
        if &magic != WEIGHTS_MAGIC {
            return Err(Error::Checkpoint(format!(
                "{} is not a backbone weights file",
                path.display()
            )));
        }
        let tensors: HashMap<String, ArrayD<f64>> =
            tensorio::read_tensors(&mut reader)?.into_iter().collect();
        let mut missing = Vec::new();
        self.visit_params("backbone", &mut |name, param| {
            match tensors.get(name) {
                Some(t) if t.shape() == param.data.shape() => param.data.assign(t),
                _ => missing.push(name.to_string()),
            }
        });
        self.visit_state("backbone", &mut |name, state| {
            match tensors.get(name) {
                Some(t) if t.shape() == state.shape() => state.assign(t),
                _ => missing.push(name.to_string()),
            }
        });
        if !missing.is_empty() {
            return Err(Error::Checkpoint(format!(
                "weights file {} is missing or mis-shaped for: {}",
                path.display(),
                missing.join(", ")
            )));
        }
        Ok(())
    }

    /// Serializes current weights in the pretrained-cache format.
    pub fn export_weights<W: std::io::Write>(&mut self, w: &mut W) -> Result<()> {
        w.write_all(WEIGHTS_MAGIC)
            .map_err(|e| Error::Checkpoint(format!("write failed: {e}")))?;
        let mut tensors: Vec<(String, ArrayD<f64>)> = Vec::new();
        self.visit_params("backbone", &mut |name, param| {
            tensors.push((name.to_string(), param.data.clone()));
        });
        self.visit_state("backbone", &mut |name, state| {
            tensors.push((name.to_string(), state.clone()));
        });
        let refs: Vec<(String, &ArrayD<f64>)> =
            tensors.iter().map(|(n, t)| (n.clone(), t)).collect();
        tensorio::write_tensors(w, &refs)
    }

    pub fn forward_eval(&self, images: &Array4<f64>) -> Array4<f64> {
        match &self.net {
            BackboneNet::Graph(g) => g.infer(images),
            BackboneNet::Fixed(t) => tile_template(t, images.dim().0),
        }
    }

    /// Training-mode forward. A frozen backbone runs in inference mode (batch
    /// norm uses running statistics, nothing is cached).
    pub fn forward_train(&mut self, images: &Array4<f64>) -> Array4<f64> {
        match &mut self.net {
            BackboneNet::Graph(g) => {
                if self.spec.trainable {
                    g.train_forward(images)
                } else {
                    g.infer(images)
                }
            }
            BackboneNet::Fixed(t) => tile_template(t, images.dim().0),
        }
    }

    /// Backpropagates into backbone weights when trainable. The image
    /// gradient is discarded: the backbone is the first stage.
    pub fn backward(&mut self, grad_out: &Array4<f64>) {
        if let BackboneNet::Graph(g) = &mut self.net {
            if self.spec.trainable {
                let _ = g.backward(grad_out);
            }
        }
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        if let BackboneNet::Graph(g) = &mut self.net {
            g.visit_params(prefix, f);
        }
    }

    pub fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        if let BackboneNet::Graph(g) = &mut self.net {
            g.visit_state(prefix, f);
        }
    }
}

fn tile_template(template: &Array3<f64>, batch: usize) -> Array4<f64> {
    let (h, w, c) = template.dim();
    Array4::from_shape_fn((batch, h, w, c), |(_, i, j, ch)| template[[i, j, ch]])
}
