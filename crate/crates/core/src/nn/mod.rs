//! Minimal dense neural network substrate: layers, activations, losses,
//! reverse-mode gradients, and Adam. Everything runs on [`crate::matrix::Matrix`]
//! in double precision with deterministic accumulation order.

pub mod activation;
pub mod adam;
pub mod backprop;
pub mod layer;
pub mod loss;

pub use activation::{sigmoid, Activation};
pub use adam::{AdamConfig, AdamState, NetAdam};
pub use backprop::{backprop, forward, forward_cached, ForwardCache, Gradients, LayerGrad};
pub use layer::DenseLayer;
pub use loss::{bce_loss, mse_loss, BCE_EPSILON};
