//! Order-agnostic stochastic training: one random context per example,
//! Nesterov momentum with a linearly decaying learning rate, early stopping
//! on a frozen-context validation estimate, and layerwise pretraining.

mod config;
mod context;
mod optim;
mod pretrain;
mod trainer;

pub use config::TrainConfig;
pub use context::{sample_context, sample_contexts};
pub use optim::{lr_at, Nesterov};
pub use pretrain::{pretrain_deep, pretrain_deep_observed, pretrain_layers, pretrain_layers_observed};
pub use trainer::{
    minibatch_loss_grad, train, train_from, train_observed, validation_loss, History, HistoryRow, TrainOutcome, TrainState,
};
