use ndarray::{concatenate, Array4, ArrayD, Axis};

use crate::nn::activation::relu_grad;
use crate::nn::{Layer, Param, Sequential};

/// Sum of a main path and an (optional conv) shortcut, optionally followed by
/// a ReLU. Covers residual bottlenecks and linear inverted residuals.
#[derive(Clone)]
pub struct ResidualAdd {
    pub main: Sequential,
    pub shortcut: Option<Sequential>,
    pub relu_after: bool,
    cached_sum: Option<Array4<f64>>,
}

impl ResidualAdd {
    pub fn new(main: Sequential, shortcut: Option<Sequential>, relu_after: bool) -> Self {
        ResidualAdd {
            main,
            shortcut,
            relu_after,
            cached_sum: None,
        }
    }
}

impl Layer for ResidualAdd {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        let main = self.main.infer(x);
        let side = match &self.shortcut {
            Some(s) => s.infer(x),
            None => x.clone(),
        };
        let sum = main + side;
        if self.relu_after {
            sum.mapv(|v| v.max(0.0))
        } else {
            sum
        }
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let main = self.main.train_forward(x);
        let side = match &mut self.shortcut {
            Some(s) => s.train_forward(x),
            None => x.clone(),
        };
        let sum = main + side;
        if self.relu_after {
            self.cached_sum = Some(sum.clone());
            sum.mapv(|v| v.max(0.0))
        } else {
            sum
        }
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let g = if self.relu_after {
            let pre = self.cached_sum.take().expect("backward without forward");
            let mut g = grad_y.clone();
            g.zip_mut_with(&pre, |gv, &s| *gv *= relu_grad(s));
            g
        } else {
            grad_y.clone()
        };
        let g_main = self.main.backward(&g);
        match &mut self.shortcut {
            Some(s) => g_main + s.backward(&g),
            None => g_main + g,
        }
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.main.visit_params(&format!("{prefix}.main"), f);
        if let Some(s) = &mut self.shortcut {
            s.visit_params(&format!("{prefix}.shortcut"), f);
        }
    }

    fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        self.main.visit_state(&format!("{prefix}.main"), f);
        if let Some(s) = &mut self.shortcut {
            s.visit_state(&format!("{prefix}.shortcut"), f);
        }
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

/// Runs branches in parallel on the same input and concatenates their outputs
/// along the channel axis.
#[derive(Clone)]
pub struct ParallelConcat {
    pub branches: Vec<Sequential>,
    widths: Vec<usize>,
}

impl ParallelConcat {
    pub fn new(branches: Vec<Sequential>) -> Self {
        ParallelConcat {
            branches,
            widths: Vec::new(),
        }
    }
}

impl Layer for ParallelConcat {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        let outs: Vec<Array4<f64>> = self.branches.iter().map(|b| b.infer(x)).collect();
        let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
        concatenate(Axis(3), &views).expect("branch outputs share spatial dims")
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let mut outs = Vec::with_capacity(self.branches.len());
        self.widths.clear();
        for b in &mut self.branches {
            let y = b.train_forward(x);
            self.widths.push(y.dim().3);
            outs.push(y);
        }
        let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
        concatenate(Axis(3), &views).expect("branch outputs share spatial dims")
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        let mut grad_x: Option<Array4<f64>> = None;
        let mut offset = 0;
        for (branch, &width) in self.branches.iter_mut().zip(self.widths.iter()) {
            let slice = grad_y
                .slice(ndarray::s![.., .., .., offset..offset + width])
                .to_owned();
            let g = branch.backward(&slice);
            grad_x = Some(match grad_x {
                None => g,
                Some(acc) => acc + g,
            });
            offset += width;
        }
        grad_x.expect("concat block has at least one branch")
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        for (i, b) in self.branches.iter_mut().enumerate() {
            b.visit_params(&format!("{prefix}.branch{i}"), f);
        }
    }

    fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        for (i, b) in self.branches.iter_mut().enumerate() {
            b.visit_state(&format!("{prefix}.branch{i}"), f);
        }
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}

/// Densely connected block: each unit consumes the concatenation of the block
/// input and all previous unit outputs, and contributes `growth` channels.
#[derive(Clone)]
pub struct DenseBlock {
    pub units: Vec<Sequential>,
    pub input_channels: usize,
    pub growth: usize,
}

impl DenseBlock {
    pub fn new(units: Vec<Sequential>, input_channels: usize, growth: usize) -> Self {
        DenseBlock {
            units,
            input_channels,
            growth,
        }
    }

    pub fn output_channels(&self) -> usize {
        self.input_channels + self.units.len() * self.growth
    }
}

impl Layer for DenseBlock {
    fn infer(&self, x: &Array4<f64>) -> Array4<f64> {
        let mut acc = x.clone();
        for unit in &self.units {
            let y = unit.infer(&acc);
            acc = concatenate(Axis(3), &[acc.view(), y.view()]).expect("same spatial dims");
        }
        acc
    }

    fn train_forward(&mut self, x: &Array4<f64>) -> Array4<f64> {
        let mut acc = x.clone();
        for unit in &mut self.units {
            let y = unit.train_forward(&acc);
            acc = concatenate(Axis(3), &[acc.view(), y.view()]).expect("same spatial dims");
        }
        acc
    }

    fn backward(&mut self, grad_y: &Array4<f64>) -> Array4<f64> {
        // Walk units in reverse, peeling the gradient of each unit's
        // contribution off the tail of the concatenated gradient and folding
        // the unit's input gradient back into the prefix (which also carries
        // the identity pass-through gradient).
        let mut g = grad_y.clone();
        for (i, unit) in self.units.iter_mut().enumerate().rev() {
            let input_width = self.input_channels + i * self.growth;
            let g_unit = g
                .slice(ndarray::s![.., .., .., input_width..input_width + self.growth])
                .to_owned();
            let g_in = unit.backward(&g_unit);
            let mut prefix = g.slice(ndarray::s![.., .., .., 0..input_width]).to_owned();
            prefix += &g_in;
            g = prefix;
        }
        g
    }

    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        for (i, u) in self.units.iter_mut().enumerate() {
            u.visit_params(&format!("{prefix}.unit{i}"), f);
        }
    }

    fn visit_state(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut ArrayD<f64>)) {
        for (i, u) in self.units.iter_mut().enumerate() {
            u.visit_state(&format!("{prefix}.unit{i}"), f);
        }
    }

    fn clone_box(&self) -> Box<dyn Layer> {
        Box::new(self.clone())
    }
}
