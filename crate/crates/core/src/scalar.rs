use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the networks are generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lower clamp applied to Bernoulli probabilities before taking logs.
    fn prob_floor() -> Self {
        Self::c(1e-12)
    }

    /// Converts an `f64` constant. Every literal used by the crate is representable.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
