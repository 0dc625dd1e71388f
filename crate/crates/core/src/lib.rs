//! Order-agnostic NADE / RNADE: one parameter set that acts as an
//! autoregressive density estimator under every ordering of the inputs.

pub mod data;
pub mod error;
pub mod inference;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod training;

pub use error::{DataError, Error, Result};
pub use scalar::Real;

/// Double-precision parameters; the default for training and evaluation.
pub type Parameters64 = model::Parameters<f64>;
/// Single-precision parameters.
pub type Parameters32 = model::Parameters<f32>;
pub type Prediction64 = model::Prediction<f64>;
pub type TrainOutcome64 = training::TrainOutcome<f64>;
