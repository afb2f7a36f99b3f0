//! Minimal dense-network engine.
//!
//! Networks are a [`NetworkSpec`] (the layer stack) plus a [`NetworkState`]
//! (the learned parameters). All arithmetic is `f64`.

mod activation;
mod adam;
mod layer;
mod loss;
mod matrix;
mod network;
mod state;

pub use activation::{activate, relu, sigmoid, softmax_rows, Activation};
pub use adam::Adam;
pub use layer::{LayerKind, LayerSpec, NetworkSpec};
pub use loss::{loss, loss_bce, loss_categorical_ce, LossKind, LOG_EPSILON};
pub use matrix::Matrix;
pub use network::{
    absorb_batch_statistics, backward, backward_from_output_grad, backward_with_input_grad,
    forward, infer, ForwardCache, Mode,
};
pub use state::{
    BatchNormParams, Gradients, LayerGrads, LayerParams, NetworkState, BATCHNORM_EPSILON,
    BATCHNORM_MOMENTUM,
};

#[cfg(test)]
mod tests;
