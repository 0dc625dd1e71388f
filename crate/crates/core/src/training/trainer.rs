use std::fmt::Write as _;

use ndarray::{ArrayView2, Axis};

use super::config::TrainConfig;
use super::context::sample_contexts;
use super::optim::{lr_at, Nesterov};
use crate::error::{Error, Result};
use crate::model::{batch_loss, batch_loss_and_gradient, MaskContext, ModelConfig, Parameters};
use crate::numerics::Rng;
use crate::scalar::Real;

const VALID_CHUNK: usize = 512;

/// Mean `J_OA` estimate over a minibatch with one fresh context per example,
/// and its gradient. `weight_decay * W` is added to every weight gradient;
/// the returned loss does not include the decay term.
pub fn minibatch_loss_grad<T: Real>(
    params: &Parameters<T>,
    batch: ArrayView2<T>,
    rng: &mut Rng,
    weight_decay: T,
) -> Result<(T, Parameters<T>)> {
    let ctxs = sample_contexts(rng, params.dim(), batch.nrows());
    let (losses, mut grad) = batch_loss_and_gradient(params, batch, &ctxs)?;
    if weight_decay > T::zero() {
        grad.add_weight_decay(params, weight_decay);
    }
    let mean = losses.iter().copied().sum::<T>() / T::from_usize_lossy(losses.len());
    Ok((mean, grad))
}

/// Mean loss over `xs` under fixed `ctxs`, accumulated in f64.
pub fn validation_loss<T: Real>(params: &Parameters<T>, xs: ArrayView2<T>, ctxs: &[MaskContext]) -> Result<f64> {
    let mut total = 0.0;
    for (c, chunk) in xs.axis_chunks_iter(Axis(0), VALID_CHUNK).enumerate() {
        let start = c * VALID_CHUNK;
        let losses = batch_loss(params, chunk, &ctxs[start..start + chunk.nrows()])?;
        total += losses.iter().map(|v| v.f64()).sum::<f64>();
    }
    Ok(total / xs.nrows() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub train: f64,
    pub valid: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
}

impl History {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Iteration with the lowest validation loss; the earliest one on ties.
    pub fn best_iteration(&self) -> Option<usize> {
        let mut best: Option<&HistoryRow> = None;
        for row in &self.rows {
            if best.is_none_or(|b| row.valid < b.valid) {
                best = Some(row);
            }
        }
        best.map(|r| r.iteration)
    }

    /// Tab-separated log, one row per iteration.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# iteration\ttrain_nll\tvalid_nll\tlr\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}\t{}", r.iteration, r.train, r.valid, r.lr).expect("write to string");
        }
        out
    }
}

/// Optimizer and bookkeeping state carried across updates.
#[derive(Clone, Debug)]
pub struct TrainState<T> {
    /// Updates performed so far.
    pub t: usize,
    /// Length of the learning-rate schedule.
    pub total: usize,
    pub optimizer: Nesterov<T>,
    /// Lowest validation loss, the iteration it was seen at, and the parameters then.
    pub best: Option<(f64, usize, Parameters<T>)>,
    pub contexts: Rng,
    batches: Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl<T: Real> TrainState<T> {
    pub fn new(params: &Parameters<T>, n_train: usize, cfg: &TrainConfig) -> Self {
        let root = Rng::new(cfg.seed);
        let mut batches = root.substream("batches", 0);
        let mut order: Vec<usize> = (0..n_train).collect();
        batches.shuffle(&mut order);
        TrainState {
            t: 0,
            total: cfg.total_updates(),
            optimizer: Nesterov::new(params, T::c(cfg.momentum)),
            best: None,
            contexts: root.substream("contexts", 0),
            batches,
            order,
            cursor: 0,
        }
    }

    /// Next minibatch of row indices; the training set is reshuffled after each pass.
    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(size);
        while idx.len() < size {
            if self.cursor == self.order.len() {
                self.batches.shuffle(&mut self.order);
                self.cursor = 0;
            }
            let take = (size - idx.len()).min(self.order.len() - self.cursor);
            idx.extend_from_slice(&self.order[self.cursor..self.cursor + take]);
            self.cursor += take;
        }
        idx
    }

    pub fn lr(&self, initial_lr: f64) -> f64 {
        lr_at(self.t, self.total, initial_lr)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub params: Parameters<T>,
    pub history: History,
    pub best_iteration: usize,
    /// Histories of the pretraining runs, shallowest first; empty without pretraining.
    pub pretraining: Vec<History>,
}

/// Fresh initialisation from `cfg.seed`, then [`train_from`].
pub fn train<T: Real>(
    model: &ModelConfig,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let params = Parameters::init(model, &mut Rng::new(cfg.seed).substream("init", 0))?;
    train_from(params, train_x, valid_x, cfg)
}

/// Runs `iterations x updates_per_iteration` updates starting from `params`.
pub fn train_from<T: Real>(
    params: Parameters<T>,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    train_observed(params, train_x, valid_x, cfg, &mut |_| {})
}

/// [`train_from`], calling `observe` with each history row as it is recorded.
pub fn train_observed<T: Real>(
    mut params: Parameters<T>,
    train_x: ArrayView2<T>,
    valid_x: ArrayView2<T>,
    cfg: &TrainConfig,
    observe: &mut dyn FnMut(&HistoryRow),
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let dim = params.dim();
    for (name, shape) in [("training", train_x.dim()), ("validation", valid_x.dim())] {
        if shape.0 == 0 {
            return Err(Error::shape(format!("a non-empty {name} set"), "0 rows"));
        }
        if shape.1 != dim {
            return Err(Error::shape(format!("{dim} columns"), format!("{} columns in the {name} set", shape.1)));
        }
    }
    let valid_ctxs = sample_contexts(&mut Rng::new(cfg.seed).substream("valid", 0), dim, valid_x.nrows());
    let decay = T::c(cfg.weight_decay);
    let mut state = TrainState::new(&params, train_x.nrows(), cfg);
    let mut history = History::default();

    for iteration in 1..=cfg.iterations {
        let mut train_sum = 0.0;
        for _ in 0..cfg.updates_per_iteration {
            let batch = train_x.select(Axis(0), &state.next_batch(cfg.minibatch_size));
            let lr = T::c(state.lr(cfg.initial_lr));
            let contexts = &mut state.contexts;
            let loss = state.optimizer.step(&mut params, lr, |p| {
                minibatch_loss_grad(p, batch.view(), contexts, decay)
            })?;
            train_sum += loss.f64();
            state.t += 1;
        }
        let valid = validation_loss(&params, valid_x, &valid_ctxs)?;
        if !valid.is_finite() {
            return Err(Error::Diverged { iteration });
        }
        let row = HistoryRow {
            iteration,
            train: train_sum / cfg.updates_per_iteration as f64,
            valid,
            lr: state.lr(cfg.initial_lr),
        };
        observe(&row);
        history.rows.push(row);
        if state.best.as_ref().is_none_or(|b| valid < b.0) {
            state.best = Some((valid, iteration, params.clone()));
        }
    }

    let (_, best_iteration, best_params) = state.best.expect("at least one iteration");
    let params = if cfg.early_stop { best_params } else { params };
    Ok(TrainOutcome {
        params,
        history,
        best_iteration,
        pretraining: Vec::new(),
    })
}
