use ndarray::{Array2, Array3, Array4};

use crate::error::{Error, Result};

/// Rank-4 activation tensor with axes (batch, height, width, channels).
///
/// Construction validates the invariants every operator relies on: all axes
/// non-empty and every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    data: Array4<f64>,
}

impl FeatureMap {
    pub fn new(data: Array4<f64>) -> Result<Self> {
        let (b, h, w, c) = data.dim();
        if b == 0 || h == 0 || w == 0 || c == 0 {
            return Err(Error::validation(format!(
                "feature map axes must all be >= 1, got ({b}, {h}, {w}, {c})"
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::validation(
                "feature map contains non-finite entries".to_string(),
            ));
        }
        Ok(FeatureMap { data })
    }

    /// Construction for values produced by internal arithmetic that is known
    /// to preserve finiteness. Debug builds still verify.
    pub(crate) fn from_computed(data: Array4<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite()));
        FeatureMap { data }
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array4<f64> {
        self.data
    }

    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn batch(&self) -> usize {
        self.data.dim().0
    }

    pub fn channels(&self) -> usize {
        self.data.dim().3
    }
}

/// Per-channel mean and population standard deviation, shape (batch, channels).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Array2<f64>,
    pub std: Array2<f64>,
}

impl ChannelStats {
    pub fn new(mean: Array2<f64>, std: Array2<f64>) -> Result<Self> {
        if mean.dim() != std.dim() {
            return Err(Error::validation(format!(
                "mean shape {:?} != std shape {:?}",
                mean.dim(),
                std.dim()
            )));
        }
        if std.iter().any(|&v| v < 0.0) {
            return Err(Error::validation("negative standard deviation".to_string()));
        }
        Ok(ChannelStats { mean, std })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.mean.dim()
    }
}

/// Stacked statistics (batch, channels, 4) with the fixed feature order
/// [mean, std, edge mean, edge std].
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeStatsTensor {
    pub data: Array3<f64>,
}

impl CompositeStatsTensor {
    pub const FEATURES: usize = 4;

    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (_, _, k) = data.dim();
        if k != Self::FEATURES {
            return Err(Error::validation(format!(
                "composite tensor must have {} features on the last axis, got {k}",
                Self::FEATURES
            )));
        }
        // features 1 and 3 are standard deviations
        for row in data.outer_iter() {
            for cell in row.outer_iter() {
                if cell[1] < 0.0 || cell[3] < 0.0 {
                    return Err(Error::validation(
                        "composite tensor has a negative std slot".to_string(),
                    ));
                }
            }
        }
        Ok(CompositeStatsTensor { data })
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }
}

/// Per-channel multiplicative gate, every weight strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GatingTensor {
    pub weights: Array2<f64>,
}

impl GatingTensor {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        if weights.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::validation(
                "gating weights must lie strictly in (0, 1)".to_string(),
            ));
        }
        Ok(GatingTensor { weights })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.weights.dim()
    }
}
