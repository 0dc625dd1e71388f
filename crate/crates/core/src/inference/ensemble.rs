use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::evaluate::logdensities;
use crate::error::{Error, Result};
use crate::model::{Ordering, Parameters};
use crate::numerics::{log_sum_exp, sample_permutation, LogDensity, Rng};
use crate::scalar::Real;

/// A set of orderings whose NADEs are averaged in probability space.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub orderings: Vec<Ordering>,
    /// Seed the orderings were drawn from; recorded with every reported number.
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(orderings: Vec<Ordering>, seed: u64) -> Result<Self> {
        if orderings.is_empty() {
            return Err(Error::Ordering("ensemble needs at least one ordering".into()));
        }
        let dim = orderings[0].dim();
        if orderings.iter().any(|o| o.dim() != dim) {
            return Err(Error::Ordering("ensemble orderings differ in dimension".into()));
        }
        Ok(EnsembleSpec { orderings, seed })
    }

    /// `k` uniformly random orderings drawn from `rng`.
    pub fn sample(dim: usize, k: usize, rng: &mut Rng) -> Result<Self> {
        let orderings = (0..k).map(|_| sample_permutation(rng, dim)).collect();
        Self::new(orderings, rng.seed())
    }

    pub fn len(&self) -> usize {
        self.orderings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orderings.is_empty()
    }
}

/// `log p(x | o_k)` for every ordering (rows) and example (columns).
pub fn ordering_logliks<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    orderings: &[Ordering],
) -> Result<Array2<T>> {
    let mut out = Array2::zeros((orderings.len(), xs.nrows()));
    for (k, order) in orderings.iter().enumerate() {
        out.row_mut(k).assign(&logdensities(params, xs, order)?);
    }
    Ok(out)
}

/// Per-example `log((1/K) sum_k exp(l_k))` over the rows of a `K x N` matrix.
pub fn mix_logliks<T: Real>(logliks: ArrayView2<T>) -> Array1<T> {
    let log_k = T::from_usize_lossy(logliks.nrows()).ln();
    Array1::from_iter(
        logliks
            .axis_iter(Axis(1))
            .map(|col| log_sum_exp(&col.to_vec()) - log_k),
    )
}

/// Ensemble log-density of every row of `xs`.
pub fn ensemble_logdensities<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    spec: &EnsembleSpec,
) -> Result<Array1<T>> {
    Ok(mix_logliks(ordering_logliks(params, xs, &spec.orderings)?.view()))
}

pub fn ensemble_logdensity<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    spec: &EnsembleSpec,
) -> Result<LogDensity<T>> {
    Ok(LogDensity(ensemble_logdensities(params, x.insert_axis(Axis(0)), spec)?[0]))
}

/// Test-set log-likelihood under several random orderings.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub ordering_seed: u64,
    pub orderings: Vec<Ordering>,
    /// `K x N` matrix of per-ordering, per-example log-densities.
    pub logliks: Array2<f64>,
    /// Mean over examples, one entry per ordering.
    pub per_ordering: Vec<f64>,
    /// Mean of `per_ordering`.
    pub mean: f64,
    /// Sample standard deviation of `per_ordering` (0 for a single ordering).
    pub ordering_sd: f64,
    /// Standard error of the mean across examples.
    pub example_stderr: f64,
    /// Mean over examples of the ensemble over all orderings.
    pub ensemble: f64,
}

impl EvalReport {
    pub fn from_logliks(ordering_seed: u64, orderings: Vec<Ordering>, logliks: Array2<f64>) -> Self {
        let k = logliks.nrows();
        let n = logliks.ncols() as f64;
        let per_ordering: Vec<f64> = logliks.rows().into_iter().map(|r| r.sum() / n).collect();
        let mean = per_ordering.iter().sum::<f64>() / k as f64;
        let ordering_sd = if k > 1 {
            (per_ordering.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        let per_example = logliks.mean_axis(Axis(0)).expect("at least one ordering");
        let ex_mean = per_example.sum() / n;
        let ex_var = per_example.iter().map(|v| (v - ex_mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let example_stderr = (ex_var / n).sqrt();
        let ensemble = mix_logliks(logliks.view()).sum() / n;
        EvalReport {
            ordering_seed,
            orderings,
            logliks,
            per_ordering,
            mean,
            ordering_sd,
            example_stderr,
            ensemble,
        }
    }

    /// Mean ensemble log-likelihood using only the first `k` orderings.
    pub fn ensemble_of(&self, k: usize) -> f64 {
        let k = k.clamp(1, self.logliks.nrows());
        let rows = self.logliks.slice(ndarray::s![..k, ..]);
        mix_logliks(rows).sum() / self.logliks.ncols() as f64
    }
}

/// Average test log-likelihood over `n_orderings` random orderings, plus the
/// ensemble of those same orderings.
pub fn avg_test_loglik<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    n_orderings: usize,
    rng: &mut Rng,
) -> Result<EvalReport> {
    if xs.nrows() == 0 {
        return Err(Error::shape("a non-empty dataset", "0 rows"));
    }
    let spec = EnsembleSpec::sample(params.dim(), n_orderings.max(1), rng)?;
    let logliks = ordering_logliks(params, xs, &spec.orderings)?.mapv(|v| v.f64());
    Ok(EvalReport::from_logliks(spec.seed, spec.orderings, logliks))
}
