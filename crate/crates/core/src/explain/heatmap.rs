use std::path::Path;

use image::RgbImage;
use ndarray::{Array2, Array3, Array4};

use super::colormap::viridis;
use crate::data::{normalize, resize_bilinear, PreprocessConfig, TARGET_HEIGHT, TARGET_WIDTH};
use crate::error::{Error, Result};
use crate::model::ClassifierModel;

const OVERLAY_ALPHA: f64 = 0.4;

/// Attention-activation heatmap for one image: the channel-wise mean of the
/// absolute attention output, upsampled to image resolution and min-max
/// normalized.
#[derive(Debug, Clone)]
pub struct Heatmap {
    /// (256, 256) values in [0, 1].
    pub values: Array2<f64>,
    /// Colorized heatmap alpha-blended over the source image.
    pub overlay: RgbImage,
    pub source_label: Option<u8>,
    pub predicted_prob: f64,
    /// Set when the raw activation map was constant and the values were
    /// defined as all zeros; callers should log a warning.
    pub degenerate: bool,
}

/// Computes the heatmap from a [0, 1]-scaled 256x256x3 image. Normalization
/// for the model input follows `cfg`; the overlay blends over the unit-scale
/// pixels.
pub fn crm_heatmap(
    model: &ClassifierModel,
    unit_image: &Array3<f64>,
    cfg: &PreprocessConfig,
    source_label: Option<u8>,
) -> Result<Heatmap> {
    let (h, w, c) = unit_image.dim();
    if h != TARGET_HEIGHT || w != TARGET_WIDTH || c != 3 {
        return Err(Error::validation(format!(
            "heatmap input must be ({TARGET_HEIGHT}, {TARGET_WIDTH}, 3), got ({h}, {w}, {c})"
        )));
    }
    let normalized = normalize(unit_image.clone(), cfg.normalization);
    let mut batch = Array4::<f64>::zeros((1, TARGET_HEIGHT, TARGET_WIDTH, 3));
    batch.index_axis_mut(ndarray::Axis(0), 0).assign(&normalized);

    let refined = model.attention_output(&batch)?;
    let prob = model.forward(&batch, false)?[0];

    let (_, fh, fw, fc) = refined.dim();
    let mut activation = Array3::<f64>::zeros((fh, fw, 1));
    for i in 0..fh {
        for j in 0..fw {
            let mut s = 0.0;
            for ch in 0..fc {
                s += refined.data()[[0, i, j, ch]].abs();
            }
            activation[[i, j, 0]] = s / fc as f64;
        }
    }

    let upsampled = resize_bilinear(&activation, TARGET_HEIGHT, TARGET_WIDTH);
    let min = upsampled.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = upsampled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = max == min;
    let values = if degenerate {
        Array2::<f64>::zeros((TARGET_HEIGHT, TARGET_WIDTH))
    } else {
        Array2::from_shape_fn((TARGET_HEIGHT, TARGET_WIDTH), |(i, j)| {
            (upsampled[[i, j, 0]] - min) / (max - min)
        })
    };

    let mut overlay = RgbImage::new(TARGET_WIDTH as u32, TARGET_HEIGHT as u32);
    for i in 0..TARGET_HEIGHT {
        for j in 0..TARGET_WIDTH {
            let heat = viridis(values[[i, j]]);
            let mut px = [0u8; 3];
            for ch in 0..3 {
                let base = unit_image[[i, j, ch]] * 255.0;
                let blended = (1.0 - OVERLAY_ALPHA) * base + OVERLAY_ALPHA * heat[ch] as f64;
                px[ch] = blended.round().clamp(0.0, 255.0) as u8;
            }
            overlay.put_pixel(j as u32, i as u32, image::Rgb(px));
        }
    }

    Ok(Heatmap {
        values,
        overlay,
        source_label,
        predicted_prob: prob,
        degenerate,
    })
}

pub fn save_heatmap_png(heatmap: &Heatmap, path: &Path) -> Result<()> {
    heatmap.overlay.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
