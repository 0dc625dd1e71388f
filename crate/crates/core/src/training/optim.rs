use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::scalar::Real;

/// Learning rate after `t` of `total` updates: linear decay reaching zero at `t = total`.
pub fn lr_at(t: usize, total: usize, initial_lr: f64) -> f64 {
    assert!(t <= total, "update {t} beyond schedule length {total}");
    if total == 0 {
        return initial_lr;
    }
    initial_lr * (1.0 - t as f64 / total as f64)
}

/// Nesterov momentum in lookahead form:
/// `v <- mu v - lr * grad(theta + mu v)`, then `theta <- theta + v`.
#[derive(Clone, Debug)]
pub struct Nesterov<T> {
    pub momentum: T,
    pub velocity: Parameters<T>,
}

impl<T: Real> Nesterov<T> {
    pub fn new(params: &Parameters<T>, momentum: T) -> Self {
        Nesterov {
            momentum,
            velocity: params.zeros_like(),
        }
    }

    /// One update; `grad_fn` receives the lookahead point and returns `(loss, gradient)`.
    pub fn step<F>(&mut self, params: &mut Parameters<T>, lr: T, grad_fn: F) -> Result<T>
    where
        F: FnOnce(&Parameters<T>) -> Result<(T, Parameters<T>)>,
    {
        let mut lookahead = params.clone();
        lookahead.scaled_add(self.momentum, &self.velocity);
        let (loss, grad) = grad_fn(&lookahead)?;
        if let Some(tensor) = grad.first_non_finite() {
            return Err(Error::NonFiniteUpdate { tensor });
        }
        self.velocity.scale(self.momentum);
        self.velocity.scaled_add(-lr, &grad);
        params.scaled_add(T::one(), &self.velocity);
        if let Some(tensor) = params.first_non_finite() {
            return Err(Error::NonFiniteUpdate { tensor });
        }
        Ok(loss)
    }
}
