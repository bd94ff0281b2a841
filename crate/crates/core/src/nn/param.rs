use ndarray::{ArrayD, IxDyn};

/// A learnable tensor with its gradient accumulator and Adam moment state.
///
/// Gradient and moment buffers are allocated lazily so that inference-only
/// model instances pay only for the weight data itself.
#[derive(Debug, Clone)]
pub struct Param {
    pub data: ArrayD<f64>,
    grad: Option<ArrayD<f64>>,
    moment1: Option<ArrayD<f64>>,
    moment2: Option<ArrayD<f64>>,
}

impl Param {
    pub fn new(data: ArrayD<f64>) -> Self {
        Param {
            data,
            grad: None,
            moment1: None,
            moment2: None,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Param::new(ArrayD::zeros(IxDyn(shape)))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Gradient accumulator, allocating it zeroed on first use.
    pub fn grad_mut(&mut self) -> &mut ArrayD<f64> {
        if self.grad.is_none() {
            self.grad = Some(ArrayD::zeros(self.data.raw_dim()));
        }
        self.grad.as_mut().unwrap()
    }

    pub fn grad(&self) -> Option<&ArrayD<f64>> {
        self.grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    /// One Adam update with bias correction. `step` counts from 1.
    pub fn adam_step(&mut self, lr: f64, beta1: f64, beta2: f64, epsilon: f64, step: u64) {
        let Some(grad) = self.grad.as_ref() else {
            return; // never touched by backward: nothing to apply
        };
        if self.moment1.is_none() {
            self.moment1 = Some(ArrayD::zeros(self.data.raw_dim()));
            self.moment2 = Some(ArrayD::zeros(self.data.raw_dim()));
        }
        let m = self.moment1.as_mut().unwrap();
        let v = self.moment2.as_mut().unwrap();
        let bc1 = 1.0 - beta1.powi(step as i32);
        let bc2 = 1.0 - beta2.powi(step as i32);
        for ((theta, g), (m_i, v_i)) in self
            .data
            .iter_mut()
            .zip(grad.iter())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *m_i = beta1 * *m_i + (1.0 - beta1) * g;
            *v_i = beta2 * *v_i + (1.0 - beta2) * g * g;
            let m_hat = *m_i / bc1;
            let v_hat = *v_i / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}
