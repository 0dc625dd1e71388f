//! Classic single-ordering NADE evaluation with the O(DH) activation recursion.

use ndarray::ArrayView1;

use super::config::HeadKind;
use super::context::Ordering;
use super::head::binary_log_prob;
use super::params::Parameters;
use crate::error::{Error, Result};
use crate::numerics::{relu, sigmoid, LogDensity};
use crate::scalar::Real;
use crate::model::Activation;

/// `log p(x)` under ordering `o` for a one-hidden-layer binary model without input masks.
///
/// Keeps the hidden pre-activation `a` and adds `x_{o_d} W[:, o_d]` after each
/// step instead of recomputing `W x_{o<d}` from scratch.
pub fn fixed_order_logdensity_1hl<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    order: &Ordering,
) -> Result<LogDensity<T>> {
    let cfg = params.config();
    if cfg.n_layers() != 1 || cfg.head != HeadKind::Binary || cfg.input_masks {
        return Err(Error::Config(
            "recursive evaluation needs one hidden layer, a binary head and no input masks".into(),
        ));
    }
    if x.len() != cfg.dim || order.dim() != cfg.dim {
        return Err(Error::shape(cfg.dim, format!("x: {}, ordering: {}", x.len(), order.dim())));
    }
    let w = &params.input.weight;
    let v = &params.head[0].weight;
    let b = &params.head[0].bias;
    let mut a = params.input.bias.clone();
    let mut total = T::zero();
    for &i in order.as_slice() {
        let h = match cfg.activation {
            Activation::Relu => a.mapv(relu),
            Activation::Sigmoid => a.mapv(sigmoid),
        };
        let logit = v.row(i).dot(&h) + b[i];
        total += binary_log_prob(logit, x[i]);
        a.scaled_add(x[i], &w.column(i));
    }
    Ok(LogDensity(total))
}
