//! Minimal layer toolkit: parameters, initializers, dense/conv/norm/pool
//! primitives with explicit forward and backward passes. Everything is f64
//! and channels-last.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod init;
pub mod layer;
pub mod linear;
pub mod param;
pub mod pool;

pub use activation::{relu, relu6, sigmoid};
pub use batchnorm::BatchNorm2d;
pub use conv::{conv_output_hw, Conv2d, DepthwiseConv2d};
pub use init::{derive_seed, uniform_fan_in};
pub use layer::{
    AvgPoolLayer, BatchNormLayer, ConvLayer, DepthwiseConvLayer, Layer, MaxPoolLayer, ReluLayer,
    Sequential,
};
pub use linear::Linear;
pub use param::Param;
pub use pool::{
    global_avg_pool, global_avg_pool_backward, global_max_pool, AvgPool2d, MaxPool2d,
};
