use ndarray::{Array2, Axis, Ix1, Ix2};
use rand_chacha::ChaCha8Rng;

use super::init::uniform_fan_in;
use super::param::Param;

/// Fully connected layer `y = x W + b` over (batch, features) matrices.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Param, // (in, out)
    pub bias: Param,   // (out,)
    pub in_features: usize,
    pub out_features: usize,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear {
            weight: Param::new(uniform_fan_in(&[in_features, out_features], in_features, rng)),
            bias: Param::zeros(&[out_features]),
            in_features,
            out_features,
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let w = self
            .weight
            .data
            .view()
            .into_dimensionality::<Ix2>()
            .expect("linear weight is 2-d");
        let b = self
            .bias
            .data
            .view()
            .into_dimensionality::<Ix1>()
            .expect("linear bias is 1-d");
        x.dot(&w) + &b
    }

    /// Backward pass: accumulates weight/bias gradients, returns grad wrt x.
    pub fn backward(&mut self, x: &Array2<f64>, grad_y: &Array2<f64>) -> Array2<f64> {
        let gw = x.t().dot(grad_y);
        let gb = grad_y.sum_axis(Axis(0));
        {
            let mut acc = self
                .weight
                .grad_mut()
                .view_mut()
                .into_dimensionality::<Ix2>()
                .expect("linear weight grad is 2-d");
            acc += &gw;
        }
        {
            let mut acc = self
                .bias
                .grad_mut()
                .view_mut()
                .into_dimensionality::<Ix1>()
                .expect("linear bias grad is 1-d");
            acc += &gb;
        }
        let w = self
            .weight
            .data
            .view()
            .into_dimensionality::<Ix2>()
            .expect("linear weight is 2-d");
        grad_y.dot(&w.t())
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&format!("{prefix}.weight"), &mut self.weight);
        f(&format!("{prefix}.bias"), &mut self.bias);
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}
