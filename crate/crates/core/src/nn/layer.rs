use ndarray::{Array4, ArrayD};

use super::activation::{relu, relu6, relu6_grad, relu_grad};
use super::batchnorm::{BatchNorm2d, BatchNormCache};
use super::conv::{Conv2d, DepthwiseConv2d};
use super::param::Param;
use super::pool::{AvgPool2d, MaxPool2d, MaxPoolCache};

/// A trainable feature-map transform. `infer` is pure; `train_forward` caches
/// whatever `backward` needs and is the only path that mutates layer state
/// (batch-norm running statistics).
pub trait Layer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64>;
    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64>;
    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64>;
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param));
    fn visit_state(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {}
    fn clone_box(&self) -> Box<dyn Layer>;
}

impl Clone for Box<dyn Layer> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

#[derive(Clone)]
pub struct Sequential {
    pub layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new() -> Self {
        Sequential { layers: Vec::new() }
    }

    pub fn push(&mut self, layer: impl Layer + 'static) {
        self.layers.push(Box::new(layer));
    }
}

impl Default for Sequential {
    fn default() -> Self {
        Self::new()
    }
}

impl Layer for Sequential {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.infer(&cur);
        }
        cur
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.train_forward(&cur);
        }
        cur
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let mut g = grad_y.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g);
        }
        g
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_params(&format!("{prefix}.{i}"), f);
        }
    }

    fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_state(&format!("{prefix}.{i}"), f);
        }
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

// ── Layer impls for the primitives ─────────────────────────────────────────

#[derive(Clone)]
pub struct ConvLayer {
    pub conv: Conv2d,
    cached_input: Option<Array4<f64>>,
}

impl ConvLayer {
    pub fn new(conv: Conv2d) -> Self {
        ConvLayer {
            conv,
            cached_input: None,
        }
    }
}

impl Layer for ConvLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        self.conv.forward(x)
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        self.cached_input = Some(x.clone());
        self.conv.forward(x)
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let x = self.cached_input.take().expect("backward without forward");
        self.conv.backward(&x, grad_y)
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.conv.visit_params(prefix, f);
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

#[derive(Clone)]
pub struct DepthwiseConvLayer {
    pub conv: DepthwiseConv2d,
    cached_input: Option<Array4<f64>>,
}

impl DepthwiseConvLayer {
    pub fn new(conv: DepthwiseConv2d) -> Self {
        DepthwiseConvLayer {
            conv,
            cached_input: None,
        }
    }
}

impl Layer for DepthwiseConvLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        self.conv.forward(x)
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        self.cached_input = Some(x.clone());
        self.conv.forward(x)
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let x = self.cached_input.take().expect("backward without forward");
        self.conv.backward(&x, grad_y)
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.conv.visit_params(prefix, f);
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

#[derive(Clone)]
pub struct BatchNormLayer {
    pub bn: BatchNorm2d,
    cache: Option<BatchNormCache>,
}

impl BatchNormLayer {
    pub fn new(bn: BatchNorm2d) -> Self {
        BatchNormLayer { bn, cache: None }
    }
}

impl Layer for BatchNormLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        self.bn.forward_eval(x)
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let (y, cache) = self.bn.forward_train(x);
        self.cache = Some(cache);
        y
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let cache = self.cache.take().expect("backward without forward");
        self.bn.backward(&cache, grad_y)
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.bn.visit_params(prefix, f);
    }

    fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        self.bn.visit_state(prefix, f);
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

#[derive(Clone)]
pub struct ReluLayer {
    cached_input: Option<Array4<f64>>,
    cap: Option<f64>, // Some(6.0) for ReLU6
}

impl ReluLayer {
    pub fn new() -> Self {
        ReluLayer {
            cached_input: None,
            cap: None,
        }
    }

    pub fn relu6() -> Self {
        ReluLayer {
            cached_input: None,
            cap: Some(6.0),
        }
    }
}

impl Default for ReluLayer {
    fn default() -> Self {
        Self::new()
    }
}

impl Layer for ReluLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        match self.cap {
            None => x.mapv(relu),
            Some(_) => x.mapv(relu6),
        }
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        self.cached_input = Some(x.clone());
        self.infer(x)
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let x = self.cached_input.take().expect("backward without forward");
        let mut g = grad_y.clone();
        match self.cap {
            None => g.zip_mut_with(&x, |gv, &xv| *gv *= relu_grad(xv)),
            Some(_) => g.zip_mut_with(&x, |gv, &xv| *gv *= relu6_grad(xv)),
        }
        g
    }

    fn visit_params(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut Param)) {}

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

#[derive(Clone)]
pub struct MaxPoolLayer {
    pub pool: MaxPool2d,
    cache: Option<MaxPoolCache>,
}

impl MaxPoolLayer {
    pub fn new(pool: MaxPool2d) -> Self {
        MaxPoolLayer { pool, cache: None }
    }
}

impl Layer for MaxPoolLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        self.pool.forward(x)
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let (y, cache) = self.pool.forward_cached(x);
        self.cache = Some(cache);
        y
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let cache = self.cache.take().expect("backward without forward");
        self.pool.backward(&cache, grad_y)
    }

    fn visit_params(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut Param)) {}

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

#[derive(Clone)]
pub struct AvgPoolLayer {
    pub pool: AvgPool2d,
    cached_dim: Option<(usize, usize, usize, usize)>,
}

impl AvgPoolLayer {
    pub fn new(pool: AvgPool2d) -> Self {
        AvgPoolLayer {
            pool,
            cached_dim: None,
        }
    }
}

impl Layer for AvgPoolLayer {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        self.pool.forward(x)
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        self.cached_dim = Some(x.dim());
        self.pool.forward(x)
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let dim = self.cached_dim.take().expect("backward without forward");
        self.pool.backward(dim, grad_y)
    }

    fn visit_params(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut Param)) {}

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}
