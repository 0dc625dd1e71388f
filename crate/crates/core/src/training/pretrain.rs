use ndarray::ArrayView2;
use rand::RngCore;

use super::config::TrainConfig;
use super::trainer::{train_observed, History, HistoryRow, TrainOutcome};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Parameters};
use crate::numerics::Rng;
use crate::scalar::Real;

/// Layerwise pretraining up to the depth of `model`.
///
/// Starts from a fresh one-layer model; each further level drops the head,
/// appends a fresh hidden layer and head, and trains every parameter for
/// `pretrain_iterations` iterations. Returns the parameters and the history
/// of each of those short runs.
pub fn pretrain_layers<T: Real>(
    model: &ModelConfig,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<(Parameters<T>, Vec<History>)> {
    pretrain_layers_observed(model, train_x, valid_x, cfg, &mut |_, _| {})
}

/// [`pretrain_layers`], reporting each history row with the depth being trained.
pub fn pretrain_layers_observed<T: Real>(
    model: &ModelConfig,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
    observe: &mut dyn FnMut(usize, &HistoryRow),
) -> Result<(Parameters<T>, Vec<History>)> {
    model.validate()?;
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let mut base = model.clone();
    base.hidden_sizes.truncate(1);
    let mut params = Parameters::init(&base, &mut root.substream("init", 0))?;
    let mut histories = Vec::new();
    for depth in 2..=model.n_layers() {
        let width = model.hidden_sizes[depth - 1];
        let grown = params.grow(width, &mut root.substream("grow", depth as u64))?;
        let level = TrainConfig {
            iterations: cfg.pretrain_iterations,
            early_stop: false,
            seed: root.substream("pretrain", depth as u64).next_u64(),
            ..cfg.clone()
        };
        let out = train_observed(grown, train_x, valid_x, &level, &mut |row| observe(depth, row)).map_err(|e| Error::Pretrain {
            depth,
            source: Box::new(e),
        })?;
        params = out.params;
        histories.push(out.history);
    }
    Ok((params, histories))
}

/// Layerwise pretraining followed by training under the full schedule.
/// With one hidden layer this is exactly [`super::train`].
pub fn pretrain_deep<T: Real>(
    model: &ModelConfig,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    pretrain_deep_observed(model, train_x, valid_x, cfg, &mut |_, _| {})
}

/// [`pretrain_deep`] with progress reporting; the final run reports depth 0.
pub fn pretrain_deep_observed<T: Real>(
    model: &ModelConfig,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
    observe: &mut dyn FnMut(usize, &HistoryRow),
) -> Result<TrainOutcome<T>> {
    let (params, histories) = pretrain_layers_observed(model, train_x, valid_x, cfg, observe)?;
    let mut out = train_observed(params, train_x, valid_x, cfg, &mut |row| observe(0, row))?;
    out.pretraining = histories;
    Ok(out)
}
