//! The shared-parameter masked network, its output heads and gradients.

mod config;
mod context;
mod fixed_order;
mod head;
mod loss;
mod network;
mod params;

pub use config::{Activation, HeadKind, ModelConfig};
pub use context::{MaskContext, Ordering};
pub use fixed_order::fixed_order_logdensity_1hl;
pub use head::MoGParams;
pub use loss::{batch_loss, batch_loss_and_gradient, loss_of_flat, masked_loss, masked_loss_and_gradient};
pub use network::{
    backward, build_masked_input, forward, masked_inputs, predict, predict_binary, predict_mog,
    Activations, Prediction,
};
pub use params::{head_names, Layer, Parameters};

pub(crate) use head::{binary_log_prob, mog_log_density};
pub(crate) use network::hidden_stack;
