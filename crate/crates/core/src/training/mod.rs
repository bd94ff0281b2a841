//! The experiment protocol: Adam/BCE per-fold training, metric computation,
//! cross-validation aggregation and checkpointing.

mod checkpoint;
mod config;
mod loss;
mod metrics;
mod optimizer;
mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{fnv1a, TrainConfig, VALID_KEYS};
pub use loss::{bce_grad, bce_loss, PROB_CLAMP};
pub use metrics::{
    metrics_from_confusion, render_table, Confusion, CrossValReport, MetricsAveraging,
    MetricsReport, THRESHOLD,
};
pub use optimizer::Adam;
pub use trainer::{cross_validate, evaluate, train_fold, TrainRecord};
