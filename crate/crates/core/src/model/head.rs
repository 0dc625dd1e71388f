//! Per-dimension output distributions: Bernoulli and mixture of Gaussians.

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, sigmoid, Rng};
use crate::scalar::Real;

/// Bernoulli log-probability of `x` under logit `a`, with the probabilities
/// floored at 1e-12 before the log.
#[inline]
pub(crate) fn binary_log_prob<T: Real>(a: T, x: T) -> T {
    let floor = T::prob_floor();
    let p = sigmoid(a).max(floor);
    let q = sigmoid(-a).max(floor);
    let mut lp = T::zero();
    if x != T::zero() {
        lp += x * p.ln();
    }
    if x != T::one() {
        lp += (T::one() - x) * q.ln();
    }
    lp
}

/// Negative log-probability and its derivative with respect to the logit.
#[inline]
pub(crate) fn binary_nll_grad<T: Real>(a: T, x: T) -> (T, T) {
    let floor = T::prob_floor();
    let p = sigmoid(a);
    let q = sigmoid(-a);
    let mut nll = T::zero();
    let mut grad = T::zero();
    if x != T::zero() {
        nll -= x * p.max(floor).ln();
        if p >= floor {
            grad -= x * q;
        }
    }
    if x != T::one() {
        nll -= (T::one() - x) * q.max(floor).ln();
        if q >= floor {
            grad += (T::one() - x) * p;
        }
    }
    (nll, grad)
}

#[inline]
fn component_log_pdf<T: Real>(x: T, mu: T, log_sigma: T) -> T {
    let r = (x - mu) * (-log_sigma).exp();
    -T::c(0.5) * (T::PI() + T::PI()).ln() - log_sigma - T::c(0.5) * r * r
}

/// `log sum_k softmax(logits)_k N(x; means_k, exp(log_sigmas_k))`.
pub(crate) fn mog_log_density<T: Real>(logits: &[T], means: &[T], log_sigmas: &[T], x: T) -> T {
    let norm = log_sum_exp(logits);
    let mut terms = [T::zero(); 64];
    if logits.len() <= terms.len() {
        for k in 0..logits.len() {
            terms[k] = logits[k] - norm + component_log_pdf(x, means[k], log_sigmas[k]);
        }
        log_sum_exp(&terms[..logits.len()])
    } else {
        let v: Vec<T> = (0..logits.len())
            .map(|k| logits[k] - norm + component_log_pdf(x, means[k], log_sigmas[k]))
            .collect();
        log_sum_exp(&v)
    }
}

/// Negative log-density and its gradient with respect to the raw head outputs.
///
/// Gradients are written (not accumulated) into the three `d_*` slices, each
/// of length K.
pub(crate) fn mog_nll_grad<T: Real>(
    logits: &[T],
    means: &[T],
    log_sigmas: &[T],
    x: T,
    d_logits: &mut [T],
    d_means: &mut [T],
    d_log_sigmas: &mut [T],
) -> T {
    let k = logits.len();
    let norm = log_sum_exp(logits);
    // joint[k] = log pi_k + log N_k, kept in d_means until the responsibilities are known
    for j in 0..k {
        d_means[j] = logits[j] - norm + component_log_pdf(x, means[j], log_sigmas[j]);
    }
    let log_p = log_sum_exp(&d_means[..k]);
    for j in 0..k {
        let resp = (d_means[j] - log_p).exp();
        let pi = (logits[j] - norm).exp();
        let inv_var = (-(log_sigmas[j] + log_sigmas[j])).exp();
        let diff = x - means[j];
        d_logits[j] = pi - resp;
        d_means[j] = -resp * diff * inv_var;
        d_log_sigmas[j] = -resp * (diff * diff * inv_var - T::one());
    }
    -log_p
}

/// Mixture-of-Gaussians conditional for a single dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MoGParams<T> {
    pub pi: Vec<T>,
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> MoGParams<T> {
    /// Softmax over the logits and `exp` of the log standard deviations.
    pub fn from_raw(logits: &[T], means: &[T], log_sigmas: &[T]) -> Result<Self> {
        let norm = log_sum_exp(logits);
        let pi: Vec<T> = logits.iter().map(|&a| (a - norm).exp()).collect();
        let sigma: Vec<T> = log_sigmas.iter().map(|&s| s.exp()).collect();
        if let Some(k) = sigma.iter().position(|s| !s.is_finite() || *s <= T::zero()) {
            return Err(Error::Config(format!(
                "mixture component {k}: exp(log sigma) out of range (log sigma = {})",
                log_sigmas[k]
            )));
        }
        if pi.iter().any(|p| !p.is_finite()) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFiniteActivation { layer: 0 });
        }
        Ok(MoGParams {
            pi,
            mu: means.to_vec(),
            sigma,
        })
    }

    pub fn components(&self) -> usize {
        self.pi.len()
    }

    pub fn log_density(&self, x: T) -> T {
        let terms: Vec<T> = (0..self.pi.len())
            .map(|k| self.pi[k].ln() + crate::numerics::gaussian_log_pdf(x, self.mu[k], self.sigma[k]))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn mean(&self) -> T {
        self.pi.iter().zip(&self.mu).map(|(&p, &m)| p * m).sum()
    }

    /// Draws a component from `pi`, then a Gaussian from it.
    pub fn sample(&self, rng: &mut Rng) -> T {
        let k = sample_categorical(&self.pi, rng);
        self.mu[k] + self.sigma[k] * T::c(rng.normal())
    }
}

pub(crate) fn sample_categorical<T: Real>(probs: &[T], rng: &mut Rng) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p.f64();
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative total; take the last positive entry
    probs.iter().rposition(|p| *p > T::zero()).unwrap_or(probs.len() - 1)
}
