use ndarray::{Array1, Axis};

use super::evaluate::prefix_logdensities;
use crate::error::{Error, Result};
use crate::model::{Ordering, Parameters};
use crate::numerics::{LogDensity, Rng};
use crate::scalar::Real;

/// `log p(x_targets | x_conditioned)` with every other dimension marginalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Query<T> {
    pub conditioned: Vec<(usize, T)>,
    pub targets: Vec<(usize, T)>,
}

impl<T: Real> Query<T> {
    pub fn new(conditioned: Vec<(usize, T)>, targets: Vec<(usize, T)>) -> Self {
        Query { conditioned, targets }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut role = vec![None; dim];
        for (set, &(i, _)) in self
            .conditioned
            .iter()
            .map(|e| ("conditioned", e))
            .chain(self.targets.iter().map(|e| ("target", e)))
        {
            if i >= dim {
                return Err(Error::Query(format!("dimension {i} out of range for {dim}")));
            }
            if let Some(prev) = role[i].replace(set) {
                return Err(Error::Query(format!("dimension {i} is both {prev} and {set}")));
            }
        }
        Ok(())
    }

    /// Dimensions neither conditioned on nor targeted.
    pub fn marginalized(&self, dim: usize) -> Vec<usize> {
        let mut used = vec![false; dim];
        for &(i, _) in self.conditioned.iter().chain(&self.targets) {
            used[i] = true;
        }
        (0..dim).filter(|&i| !used[i]).collect()
    }

    /// Conditioned dimensions first, then targets, then the marginalized rest;
    /// each block in random order.
    pub fn ordering(&self, dim: usize, rng: &mut Rng) -> Result<Ordering> {
        self.validate(dim)?;
        let mut cond: Vec<usize> = self.conditioned.iter().map(|e| e.0).collect();
        let mut targ: Vec<usize> = self.targets.iter().map(|e| e.0).collect();
        let mut rest = self.marginalized(dim);
        rng.shuffle(&mut cond);
        rng.shuffle(&mut targ);
        rng.shuffle(&mut rest);
        cond.extend(targ);
        cond.extend(rest);
        Ordering::new(cond)
    }

    /// Full-length vector holding the query's values; marginalized entries are zero and never read.
    pub fn values(&self, dim: usize) -> Array1<T> {
        let mut x = Array1::zeros(dim);
        for &(i, v) in self.conditioned.iter().chain(&self.targets) {
            x[i] = v;
        }
        x
    }
}

/// Evaluates a prefix-form query with an ordering built from `rng`.
pub fn query_logdensity<T: Real>(params: &Parameters<T>, q: &Query<T>, rng: &mut Rng) -> Result<LogDensity<T>> {
    let dim = params.dim();
    let order = q.ordering(dim, rng)?;
    query_logdensity_with(params, q, &order)
}

/// Evaluates a query under an explicit ordering, which must list the
/// conditioned dimensions first and the targets next.
pub fn query_logdensity_with<T: Real>(
    params: &Parameters<T>,
    q: &Query<T>,
    order: &Ordering,
) -> Result<LogDensity<T>> {
    let dim = params.dim();
    q.validate(dim)?;
    let (a, b) = (q.conditioned.len(), q.conditioned.len() + q.targets.len());
    let mut in_cond = vec![false; dim];
    for &(i, _) in &q.conditioned {
        in_cond[i] = true;
    }
    let mut in_targ = vec![false; dim];
    for &(i, _) in &q.targets {
        in_targ[i] = true;
    }
    if order.dim() != dim
        || !order.as_slice()[..a].iter().all(|&i| in_cond[i])
        || !order.as_slice()[a..b].iter().all(|&i| in_targ[i])
    {
        return Err(Error::Query("ordering is not in conditioned/target/marginal form".into()));
    }
    if a == b {
        return Ok(LogDensity(T::zero()));
    }
    let x = q.values(dim);
    Ok(LogDensity(prefix_logdensities(params, x.view().insert_axis(Axis(0)), order, a..b)?[0]))
}
