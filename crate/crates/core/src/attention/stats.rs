use ndarray::{Array2, Array3, Array4};

use crate::error::{Error, Result};
use crate::tensor::{ChannelStats, CompositeStatsTensor, FeatureMap};

/// Guards the 1/sigma factor in the backward pass at zero-variance channels.
const STD_FLOOR: f64 = 1e-6;

/// Per-channel mean and population standard deviation over spatial positions.
pub fn channel_stats(f: &FeatureMap) -> ChannelStats {
    let x = f.data();
    let (batch, h, w, c) = x.dim();
    let n = (h * w) as f64;
    let mut mean = Array2::<f64>::zeros((batch, c));
    let mut std = Array2::<f64>::zeros((batch, c));
    for b in 0..batch {
        for ch in 0..c {
            let mut s = 0.0;
            for i in 0..h {
                for j in 0..w {
                    s += x[[b, i, j, ch]];
                }
            }
            let m = s / n;
            let mut var = 0.0;
            for i in 0..h {
                for j in 0..w {
                    let d = x[[b, i, j, ch]] - m;
                    var += d * d;
                }
            }
            mean[[b, ch]] = m;
            std[[b, ch]] = (var / n).sqrt();
        }
    }
    ChannelStats { mean, std }
}

/// Gradient of [`channel_stats`] wrt the feature map, given gradients on the
/// mean and std outputs. The std derivative is floored so flat channels do
/// not produce infinite gradients.
pub fn channel_stats_backward(
    f: &Array4<f64>,
    stats: &ChannelStats,
    grad_mean: &Array2<f64>,
    grad_std: &Array2<f64>,
) -> Array4<f64> {
    let (batch, h, w, c) = f.dim();
    let n = (h * w) as f64;
    let mut grad = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for ch in 0..c {
            let gm = grad_mean[[b, ch]] / n;
            let gs = grad_std[[b, ch]] / (n * stats.std[[b, ch]].max(STD_FLOOR));
            let m = stats.mean[[b, ch]];
            for i in 0..h {
                for j in 0..w {
                    grad[[b, i, j, ch]] = gm + gs * (f[[b, i, j, ch]] - m);
                }
            }
        }
    }
    grad
}

/// Packs intensity and edge statistics into the (B, C, 4) composite tensor
/// with feature order [mean, std, edge mean, edge std].
pub fn build_composite(
    stats_f: &ChannelStats,
    stats_edge: &ChannelStats,
) -> Result<CompositeStatsTensor> {
    if stats_f.dim() != stats_edge.dim() {
        return Err(Error::validation(format!(
            "intensity stats shape {:?} != edge stats shape {:?}",
            stats_f.dim(),
            stats_edge.dim()
        )));
    }
    let (batch, c) = stats_f.dim();
    let mut data = Array3::<f64>::zeros((batch, c, CompositeStatsTensor::FEATURES));
    for b in 0..batch {
        for ch in 0..c {
            data[[b, ch, 0]] = stats_f.mean[[b, ch]];
            data[[b, ch, 1]] = stats_f.std[[b, ch]];
            data[[b, ch, 2]] = stats_edge.mean[[b, ch]];
            data[[b, ch, 3]] = stats_edge.std[[b, ch]];
        }
    }
    Ok(CompositeStatsTensor { data })
}

/// Inverse of [`build_composite`]: recovers (mean_f, std_f, mean_e, std_e).
pub fn split_composite(
    t: &CompositeStatsTensor,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let (batch, c, _) = t.dim();
    let mut parts = [
        Array2::<f64>::zeros((batch, c)),
        Array2::<f64>::zeros((batch, c)),
        Array2::<f64>::zeros((batch, c)),
        Array2::<f64>::zeros((batch, c)),
    ];
    for b in 0..batch {
        for ch in 0..c {
            for (k, part) in parts.iter_mut().enumerate() {
                part[[b, ch]] = t.data[[b, ch, k]];
            }
        }
    }
    let [a, b_, c_, d] = parts;
    (a, b_, c_, d)
}
