//! Dual-attention fundus image classifier.
//!
//! A CNN backbone extracts features from 256x256 RGB fundus photographs; the
//! features pass through CBAM (channel then spatial attention) and a channel
//! recalibration gate built from intensity and edge statistics, then through
//! global average pooling into a single-logit sigmoid head. The crate also
//! carries the full experiment pipeline: dataset ingestion, stratified
//! cross-validation, training, metric reports, checkpoints and attention
//! heatmaps.

pub mod attention;
pub mod backbone;
pub mod data;
pub mod error;
pub mod explain;
pub mod model;
pub mod nn;
pub mod tensor;
pub mod tensorio;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{ChannelStats, CompositeStatsTensor, FeatureMap, GatingTensor};
