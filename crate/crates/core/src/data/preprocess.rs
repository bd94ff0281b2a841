use std::path::Path;

use image::DynamicImage;
use ndarray::Array3;

use super::augment::AugmentConfig;
use crate::backbone::BackboneKind;
use crate::error::{Error, Result};

pub const TARGET_HEIGHT: usize = 256;
pub const TARGET_WIDTH: usize = 256;

/// What happens after pixels are scaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    /// Keep [0, 1].
    Unit,
    /// Subtract the ImageNet channel means and divide by the std devs.
    ImagenetMeanStd,
    /// Map to [-1, 1].
    Centered,
}

const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];

impl NormalizationMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "unit" => Ok(NormalizationMode::Unit),
            "imagenet" => Ok(NormalizationMode::ImagenetMeanStd),
            "centered" => Ok(NormalizationMode::Centered),
            other => Err(Error::config(format!(
                "unknown normalization '{other}'; expected unit, imagenet or centered"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormalizationMode::Unit => "unit",
            NormalizationMode::ImagenetMeanStd => "imagenet",
            NormalizationMode::Centered => "centered",
        }
    }

    /// Convention matching how each architecture family is usually fed.
    pub fn default_for(kind: BackboneKind) -> Self {
        match kind {
            BackboneKind::DenseNet121 | BackboneKind::ResNet50 => {
                NormalizationMode::ImagenetMeanStd
            }
            BackboneKind::MobileNetV2 | BackboneKind::InceptionV3 => NormalizationMode::Centered,
            BackboneKind::Stub => NormalizationMode::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub normalization: NormalizationMode,
    pub augment: AugmentConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            normalization: NormalizationMode::Unit,
            augment: AugmentConfig::default(),
        }
    }
}

/// Decodes an image, forcing RGB. Returns the [0, 1]-scaled pixel array at
/// the native resolution and whether a color-space conversion happened.
pub fn load_unit_image(path: &Path) -> Result<(Array3<f64>, bool)> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let converted = !matches!(img, DynamicImage::ImageRgb8(_));
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let mut out = Array3::<f64>::zeros((h as usize, w as usize, 3));
    for (x, y, pixel) in rgb.enumerate_pixels() {
        for ch in 0..3 {
            out[[y as usize, x as usize, ch]] = pixel.0[ch] as f64 / 255.0;
        }
    }
    Ok((out, converted))
}

/// Bilinear resampling with half-pixel alignment and edge clamping.
pub fn resize_bilinear(img: &Array3<f64>, out_h: usize, out_w: usize) -> Array3<f64> {
    let (h, w, c) = img.dim();
    if h == out_h && w == out_w {
        return img.clone();
    }
    let scale_y = h as f64 / out_h as f64;
    let scale_x = w as f64 / out_w as f64;
    let mut out = Array3::<f64>::zeros((out_h, out_w, c));
    for oy in 0..out_h {
        let sy = ((oy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = ((ox as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = sx - x0 as f64;
            for ch in 0..c {
                let top = img[[y0, x0, ch]] * (1.0 - tx) + img[[y0, x1, ch]] * tx;
                let bottom = img[[y1, x0, ch]] * (1.0 - tx) + img[[y1, x1, ch]] * tx;
                out[[oy, ox, ch]] = top * (1.0 - ty) + bottom * ty;
            }
        }
    }
    out
}

pub fn normalize(mut img: Array3<f64>, mode: NormalizationMode) -> Array3<f64> {
    match mode {
        NormalizationMode::Unit => {}
        NormalizationMode::ImagenetMeanStd => {
            for ((_, _, ch), v) in img.indexed_iter_mut() {
                *v = (*v - IMAGENET_MEAN[ch]) / IMAGENET_STD[ch];
            }
        }
        NormalizationMode::Centered => {
            img.mapv_inplace(|v| 2.0 * v - 1.0);
        }
    }
    img
}

/// Inference-path preprocessing: resize to 256x256 and normalize.
pub fn preprocess(unit_image: &Array3<f64>, cfg: &PreprocessConfig) -> Array3<f64> {
    let resized = resize_bilinear(unit_image, TARGET_HEIGHT, TARGET_WIDTH);
    normalize(resized, cfg.normalization)
}

pub fn preprocess_file(path: &Path, cfg: &PreprocessConfig) -> Result<Array3<f64>> {
    let (img, _) = load_unit_image(path)?;
    Ok(preprocess(&img, cfg))
}

/// Training-path step 1: resize only, leaving pixels in [0, 1] so that
/// augmentation happens before normalization.
pub fn resized_unit_file(path: &Path) -> Result<Array3<f64>> {
    let (img, _) = load_unit_image(path)?;
    Ok(resize_bilinear(&img, TARGET_HEIGHT, TARGET_WIDTH))
}
