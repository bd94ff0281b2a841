use crate::model::ClassifierModel;
use crate::training::config::TrainConfig;

/// Adam with bias correction. One shared step counter drives the correction
/// for every parameter it touches.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
}

impl Adam {
    pub fn from_config(cfg: &TrainConfig) -> Self {
        Adam {
            learning_rate: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            step_count: 0,
        }
    }

    pub fn step(&mut self, model: &mut ClassifierModel) {
        self.step_count += 1;
        let (lr, b1, b2, eps, t) = (
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.step_count,
        );
        model.visit_trainable_params(&mut |_, p| p.adam_step(lr, b1, b2, eps, t));
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}
