//! Scalar kernels, seeded randomness and the finite-difference gradient oracle.

mod rng;

pub use rng::{sample_permutation, sample_subset, Rng, RNG_ALGORITHM};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A log probability or log probability density, in nats.
#[derive(Copy, Clone, Debug, Default, PartialEq, PartialOrd)]
pub struct LogDensity<T = f64>(pub T);

impl<T: Real> LogDensity<T> {
    pub fn nats(self) -> T {
        self.0
    }
}

/// Logistic sigmoid, evaluated so that neither branch can overflow.
#[inline]
pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub fn relu<T: Real>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

/// Subgradient of [`relu`]; zero at the origin.
#[inline]
pub fn relu_grad<T: Real>(z: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// `log(sum(exp(v)))` with a max shift. Panics on empty input.
pub fn log_sum_exp<T: Real>(v: &[T]) -> T {
    assert!(!v.is_empty(), "log_sum_exp of an empty slice");
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let sum: T = v.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Log-density of `N(mu, sigma^2)` at `x`. Panics unless `sigma > 0`.
#[inline]
pub fn gaussian_log_pdf<T: Real>(x: T, mu: T, sigma: T) -> T {
    assert!(sigma > T::zero(), "gaussian_log_pdf requires sigma > 0");
    let r = (x - mu) / sigma;
    -T::c(0.5) * (T::PI() + T::PI()).ln() - sigma.ln() - T::c(0.5) * r * r
}

/// Central-difference gradient `(f(θ+εe_i) - f(θ-εe_i)) / 2ε` for every coordinate.
pub fn finite_diff_gradient<T, F>(mut f: F, theta: &[T], eps: T) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    assert!(eps > T::zero(), "finite difference step must be positive");
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        probe[i] = theta[i] + eps;
        let up = f(&probe);
        probe[i] = theta[i] - eps;
        let down = f(&probe);
        probe[i] = theta[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteProbe { coord: i });
        }
        grad.push((up - down) / (eps + eps));
    }
    Ok(grad)
}
