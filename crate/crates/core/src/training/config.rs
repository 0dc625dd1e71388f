use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub updates_per_iteration: usize,
    pub minibatch_size: usize,
    pub initial_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Iterations spent at each depth during layerwise pretraining.
    pub pretrain_iterations: usize,
    pub seed: u64,
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 100,
            updates_per_iteration: 1000,
            minibatch_size: 100,
            initial_lr: 0.001,
            momentum: 0.9,
            weight_decay: 0.0,
            pretrain_iterations: 20,
            seed: 0,
            early_stop: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::TrainConfig(msg));
        for (name, v) in [
            ("iterations", self.iterations),
            ("updates_per_iteration", self.updates_per_iteration),
            ("minibatch_size", self.minibatch_size),
            ("pretrain_iterations", self.pretrain_iterations),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad(format!("initial_lr must be positive, got {}", self.initial_lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        Ok(())
    }

    pub fn total_updates(&self) -> usize {
        self.iterations * self.updates_per_iteration
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iterations={} updates_per_iteration={} minibatch_size={} initial_lr={} momentum={} \
             weight_decay={} pretrain_iterations={} seed={} early_stop={}",
            self.iterations,
            self.updates_per_iteration,
            self.minibatch_size,
            self.initial_lr,
            self.momentum,
            self.weight_decay,
            self.pretrain_iterations,
            self.seed,
            self.early_stop
        )
    }
}
