//! Forward and backward passes of the masked deep network.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::config::{Activation, HeadKind, ModelConfig};
use super::context::MaskContext;
use super::head::{binary_log_prob, mog_log_density, MoGParams};
use super::params::{Layer, Parameters};
use crate::error::{Error, Result};
use crate::numerics::{relu, relu_grad, sigmoid, LogDensity};
use crate::scalar::Real;

/// Everything a forward pass produces, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Activations<T> {
    /// Pre-activations of each hidden layer, `N x H_l`.
    pub pre: Vec<Array2<T>>,
    /// Post-activations of each hidden layer, `N x H_l`.
    pub hidden: Vec<Array2<T>>,
    /// Raw head outputs, one `N x rows` matrix per head tensor.
    pub outputs: Vec<Array2<T>>,
}

/// `concat(x * m, m)` with masks, `x * m` without.
pub fn build_masked_input<T: Real>(
    x: ArrayView1<T>,
    ctx: &MaskContext,
    cfg: &ModelConfig,
) -> Result<Array1<T>> {
    if x.len() != cfg.dim || ctx.dim() != cfg.dim {
        return Err(Error::shape(
            format!("x and mask of length {}", cfg.dim),
            format!("x of length {}, mask of length {}", x.len(), ctx.dim()),
        ));
    }
    let mut input = Array1::zeros(cfg.input_width());
    fill_masked_row(input.view_mut().into_slice().expect("contiguous"), x, ctx.mask(), cfg);
    Ok(input)
}

fn fill_masked_row<T: Real>(row: &mut [T], x: ArrayView1<T>, mask: &[bool], cfg: &ModelConfig) {
    let dim = cfg.dim;
    for i in 0..dim {
        if mask[i] {
            row[i] = x[i];
            if cfg.input_masks {
                row[dim + i] = T::one();
            }
        }
    }
}

/// Batched [`build_masked_input`]: row `n` uses `ctxs[n]`.
pub fn masked_inputs<T: Real>(
    xs: ArrayView2<T>,
    ctxs: &[MaskContext],
    cfg: &ModelConfig,
) -> Result<Array2<T>> {
    if xs.ncols() != cfg.dim {
        return Err(Error::shape(format!("{} columns", cfg.dim), format!("{} columns", xs.ncols())));
    }
    if xs.nrows() != ctxs.len() {
        return Err(Error::shape(
            format!("{} contexts", xs.nrows()),
            format!("{} contexts", ctxs.len()),
        ));
    }
    let mut inputs = Array2::zeros((xs.nrows(), cfg.input_width()));
    for (n, (mut row, ctx)) in inputs.outer_iter_mut().zip(ctxs).enumerate() {
        if ctx.dim() != cfg.dim {
            return Err(Error::Example {
                index: n,
                source: Box::new(Error::shape(cfg.dim, ctx.dim())),
            });
        }
        let slice = row.as_slice_mut().expect("contiguous row");
        fill_masked_row(slice, xs.row(n), ctx.mask(), cfg);
    }
    Ok(inputs)
}

pub(crate) fn affine<T: Real>(input: ArrayView2<T>, layer: &Layer<T>) -> Array2<T> {
    let mut z = input.dot(&layer.weight.t());
    z += &layer.bias;
    z
}

pub(crate) fn activate<T: Real>(kind: Activation, pre: &Array2<T>) -> Array2<T> {
    match kind {
        Activation::Relu => pre.mapv(relu),
        Activation::Sigmoid => pre.mapv(sigmoid),
    }
}

fn check_finite<T: Real>(values: &Array2<T>, layer: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation { layer })
    }
}

/// Pre-activations and activations of every hidden layer.
pub(crate) type HiddenStack<T> = (Vec<Array2<T>>, Vec<Array2<T>>);

/// Runs every hidden layer starting from the first layer's pre-activation.
pub(crate) fn hidden_stack<T: Real>(params: &Parameters<T>, pre1: Array2<T>) -> Result<HiddenStack<T>> {
    let act = params.config().activation;
    check_finite(&pre1, 1)?;
    let mut hidden = vec![activate(act, &pre1)];
    let mut pre = vec![pre1];
    for (l, layer) in params.hidden.iter().enumerate() {
        let z = affine(hidden.last().expect("non-empty").view(), layer);
        check_finite(&z, l + 2)?;
        hidden.push(activate(act, &z));
        pre.push(z);
    }
    Ok((pre, hidden))
}

/// Full forward pass over a batch of already-masked inputs (`N x input_width`).
pub fn forward<T: Real>(params: &Parameters<T>, inputs: ArrayView2<T>) -> Result<Activations<T>> {
    let cfg = params.config();
    if inputs.ncols() != cfg.input_width() {
        return Err(Error::shape(
            format!("{} input columns", cfg.input_width()),
            format!("{} input columns", inputs.ncols()),
        ));
    }
    let (pre, hidden) = hidden_stack(params, affine(inputs, &params.input))?;
    let top = hidden.last().expect("non-empty").view();
    let outputs: Vec<Array2<T>> = params.head.iter().map(|layer| affine(top, layer)).collect();
    for out in &outputs {
        check_finite(out, cfg.n_layers() + 1)?;
    }
    Ok(Activations { pre, hidden, outputs })
}

/// Backpropagates head-output gradients (`N x rows` per head tensor) to every parameter.
pub fn backward<T: Real>(
    params: &Parameters<T>,
    inputs: ArrayView2<T>,
    acts: &Activations<T>,
    out_grads: &[Array2<T>],
) -> Parameters<T> {
    let cfg = params.config();
    let mut grad = params.zeros_like();
    let top = acts.hidden.last().expect("non-empty");

    let mut d_hidden = Array2::<T>::zeros(top.raw_dim());
    for ((layer, g_layer), g_out) in params.head.iter().zip(grad.head.iter_mut()).zip(out_grads) {
        g_layer.weight = g_out.t().dot(top);
        g_layer.bias = g_out.sum_axis(Axis(0));
        d_hidden = d_hidden + g_out.dot(&layer.weight);
    }

    for l in (0..cfg.n_layers()).rev() {
        let d_pre = match cfg.activation {
            Activation::Relu => {
                let mut d = d_hidden;
                d.zip_mut_with(&acts.pre[l], |g, &z| *g *= relu_grad(z));
                d
            }
            Activation::Sigmoid => {
                let mut d = d_hidden;
                d.zip_mut_with(&acts.hidden[l], |g, &h| *g *= h * (T::one() - h));
                d
            }
        };
        let g_layer = if l == 0 { &mut grad.input } else { &mut grad.hidden[l - 1] };
        g_layer.weight = if l == 0 {
            d_pre.t().dot(&inputs)
        } else {
            d_pre.t().dot(&acts.hidden[l - 1])
        };
        g_layer.bias = d_pre.sum_axis(Axis(0));
        if l == 0 {
            break;
        }
        let weight = &params.hidden[l - 1].weight;
        d_hidden = d_pre.dot(weight);
    }
    grad
}

/// Head outputs for one example under one mask context.
#[derive(Clone, Debug)]
pub struct Prediction<T> {
    head: HeadKind,
    ctx: MaskContext,
    raw: Vec<Array1<T>>,
}

/// Single-example forward pass.
pub fn predict<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    ctx: &MaskContext,
) -> Result<Prediction<T>> {
    let input = build_masked_input(x, ctx, params.config())?;
    let n = input.len();
    let acts = forward(params, input.into_shape_with_order((1, n)).expect("row").view())?;
    Ok(Prediction {
        head: params.config().head,
        ctx: ctx.clone(),
        raw: acts.outputs.into_iter().map(|o| o.row(0).to_owned()).collect(),
    })
}

impl<T: Real> Prediction<T> {
    pub fn raw(&self) -> &[Array1<T>] {
        &self.raw
    }

    pub fn context(&self) -> &MaskContext {
        &self.ctx
    }

    /// Bernoulli probabilities for every dimension; only unobserved entries are meaningful.
    pub fn probabilities(&self) -> Result<Array1<T>> {
        match self.head {
            HeadKind::Binary => Ok(self.raw[0].mapv(sigmoid)),
            HeadKind::Mog { .. } => Err(Error::Head { expected: "binary" }),
        }
    }

    /// Mixture parameters for every dimension.
    pub fn mixtures(&self) -> Result<Vec<MoGParams<T>>> {
        let HeadKind::Mog { components: k } = self.head else {
            return Err(Error::Head { expected: "mog" });
        };
        let dim = self.ctx.dim();
        (0..dim)
            .map(|i| {
                let r = s![i * k..(i + 1) * k];
                let (a, m, ls) = (
                    self.raw[0].slice(r),
                    self.raw[1].slice(r),
                    self.raw[2].slice(r),
                );
                MoGParams::from_raw(
                    a.as_slice().expect("contiguous"),
                    m.as_slice().expect("contiguous"),
                    ls.as_slice().expect("contiguous"),
                )
            })
            .collect()
    }

    /// `log p(x_target = value | observed)`. The target must be unobserved.
    pub fn conditional_logdensity(&self, value: T, target: usize) -> Result<LogDensity<T>> {
        if target >= self.ctx.dim() {
            return Err(Error::Context(format!("target {target} out of range")));
        }
        if self.ctx.is_observed(target) {
            return Err(Error::Context(format!("target {target} is observed")));
        }
        Ok(LogDensity(raw_conditional_logdensity(self.head, &self.raw, 0, target, value)))
    }
}

/// Conditional log-density of `value` at dimension `target` from row `n` of raw head outputs.
pub(crate) fn raw_conditional_logdensity<T: Real, R>(
    head: HeadKind,
    raw: &[R],
    n: usize,
    target: usize,
    value: T,
) -> T
where
    R: RowSource<T>,
{
    match head {
        HeadKind::Binary => binary_log_prob(raw[0].at(n, target), value),
        HeadKind::Mog { components: k } => {
            let a = raw[0].span(n, target * k, k);
            let m = raw[1].span(n, target * k, k);
            let ls = raw[2].span(n, target * k, k);
            mog_log_density(a, m, ls, value)
        }
    }
}

/// Uniform access to raw head outputs stored as batch matrices or single rows.
pub(crate) trait RowSource<T> {
    fn span(&self, n: usize, start: usize, len: usize) -> &[T];
    fn at(&self, n: usize, j: usize) -> T
    where
        T: Copy,
    {
        self.span(n, j, 1)[0]
    }
}

impl<T> RowSource<T> for Array1<T> {
    fn span(&self, _n: usize, start: usize, len: usize) -> &[T] {
        &self.as_slice().expect("contiguous")[start..start + len]
    }
}

impl<T> RowSource<T> for Array2<T> {
    fn span(&self, n: usize, start: usize, len: usize) -> &[T] {
        let cols = self.ncols();
        &self.as_slice().expect("standard layout")[n * cols + start..n * cols + start + len]
    }
}

pub fn predict_binary<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    ctx: &MaskContext,
) -> Result<Array1<T>> {
    if params.config().head != HeadKind::Binary {
        return Err(Error::Head { expected: "binary" });
    }
    predict(params, x, ctx)?.probabilities()
}

pub fn predict_mog<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    ctx: &MaskContext,
) -> Result<Vec<MoGParams<T>>> {
    if !matches!(params.config().head, HeadKind::Mog { .. }) {
        return Err(Error::Head { expected: "mog" });
    }
    predict(params, x, ctx)?.mixtures()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use ndarray::{array, Array2};

    #[test]
    fn masked_input_examples() {
        let cfg = ModelConfig::binary(4, &[3]);
        let x = array![1.0f64, 1.0, 0.0, 1.0];
        let ctx = MaskContext::new(4, &[1]).unwrap();
        let inp = build_masked_input(x.view(), &ctx, &cfg).unwrap();
        assert_eq!(inp, array![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let empty = build_masked_input(x.view(), &MaskContext::empty(4), &cfg).unwrap();
        assert!(empty.len() == 8 && empty.iter().all(|&v| v == 0.0));
        let full = build_masked_input(x.view(), &MaskContext::new(4, &[0, 1, 2, 3]).unwrap(), &cfg).unwrap();
        assert_eq!(full, array![1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let no_mask = cfg.clone().with_input_masks(false);
        assert_eq!(
            build_masked_input(x.view(), &ctx, &no_mask).unwrap(),
            array![0.0, 1.0, 0.0, 0.0]
        );
        assert!(build_masked_input(array![1.0f64].view(), &ctx, &cfg).is_err());
    }

    #[test]
    fn zero_model_predicts_half() {
        let cfg = ModelConfig::binary(5, &[4, 3]);
        let p = Parameters::<f64>::zeros(&cfg).unwrap();
        let x = Array1::from_elem(5, 1.0);
        let probs = predict_binary(&p, x.view(), &MaskContext::new(5, &[0, 3]).unwrap()).unwrap();
        assert!(probs.iter().all(|&v| v == 0.5));
        assert!(predict_mog(&p, x.view(), &MaskContext::empty(5)).is_err());
    }

    #[test]
    fn one_unit_toy() {
        // D=2, H=1, sigmoid hidden unit, binary head
        let cfg = ModelConfig::binary(2, &[1]).with_activation(Activation::Sigmoid);
        let mut p = Parameters::<f64>::zeros(&cfg).unwrap();
        p.input.weight = array![[1.0, 0.0, 0.0, 0.0]];
        p.head[0].weight = array![[1.0], [1.0]];
        let x = array![1.0, 0.0];
        let ctx = MaskContext::new(2, &[0]).unwrap();
        let probs = predict_binary(&p, x.view(), &ctx).unwrap();
        // h = sigm(1), p = sigm(h), both evaluated in mpmath
        assert!((probs[1] - 0.6750375273768237).abs() < 1e-15);
        let pred = predict(&p, x.view(), &ctx).unwrap();
        let ld = pred.conditional_logdensity(1.0, 1).unwrap().nats();
        assert!((ld - 0.6750375273768237f64.ln()).abs() < 1e-15);
        assert!(pred.conditional_logdensity(1.0, 0).is_err());
    }

    #[test]
    fn identity_relu_chain() {
        let cfg = ModelConfig::binary(3, &[3, 3, 3]).with_input_masks(false);
        let mut p = Parameters::<f64>::zeros(&cfg).unwrap();
        p.input.weight = Array2::eye(3);
        for l in &mut p.hidden {
            l.weight = Array2::eye(3);
        }
        let inputs = array![[0.5, 2.0, 7.25]];
        let acts = forward(&p, inputs.view()).unwrap();
        assert_eq!(acts.hidden[2], inputs);
    }

    #[test]
    fn zero_mog_outputs() {
        let cfg = ModelConfig::mog(2, &[3], 3);
        let p = Parameters::<f64>::zeros(&cfg).unwrap();
        let mix = predict_mog(&p, array![0.3, -1.0].view(), &MaskContext::empty(2)).unwrap();
        for m in mix {
            assert!(m.pi.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
            assert!(m.mu.iter().all(|&v| v == 0.0));
            assert!(m.sigma.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn mog_toy_matches_scalar_recomputation() {
        // D=1, H=1, K=2, masks on: input is (x*m, m) = (0, 0) for the only context,
        // so the hidden unit is relu(c) and each head row is w*h + b.
        let cfg = ModelConfig::mog(1, &[1], 2);
        let mut p = Parameters::<f64>::zeros(&cfg).unwrap();
        p.input.bias = array![0.8];
        p.head[0].weight = array![[0.5], [-1.0]];
        p.head[0].bias = array![0.1, 0.2];
        p.head[1].weight = array![[2.0], [-0.5]];
        p.head[1].bias = array![-1.0, 0.3];
        p.head[2].weight = array![[0.25], [-0.75]];
        p.head[2].bias = array![0.0, 0.1];
        let mix = predict_mog(&p, array![0.4].view(), &MaskContext::empty(1)).unwrap();
        let h = 0.8f64;
        let a = [0.5 * h + 0.1, -h + 0.2];
        let z = a[0].exp() + a[1].exp();
        let mu = [2.0 * h - 1.0, -0.5 * h + 0.3];
        let sd = [(0.25 * h).exp(), (-0.75 * h + 0.1).exp()];
        for k in 0..2 {
            assert!((mix[0].pi[k] - a[k].exp() / z).abs() < 1e-15);
            assert!((mix[0].mu[k] - mu[k]).abs() < 1e-15);
            assert!((mix[0].sigma[k] - sd[k]).abs() < 1e-15);
        }
        let dens: f64 = (0..2)
            .map(|k| {
                a[k].exp() / z * (-(0.4 - mu[k]).powi(2) / (2.0 * sd[k] * sd[k])).exp()
                    / (sd[k] * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum();
        let pred = predict(&p, array![0.4].view(), &MaskContext::empty(1)).unwrap();
        let ld = pred.conditional_logdensity(0.4, 0).unwrap().nats();
        assert!((ld - dens.ln()).abs() < 1e-14);
        assert!((mix[0].log_density(0.4) - dens.ln()).abs() < 1e-14);
    }

    #[test]
    fn set_invariance_is_bitwise() {
        let cfg = ModelConfig::mog(6, &[5, 4], 2);
        let p = Parameters::<f64>::init(&cfg, &mut Rng::new(4)).unwrap();
        let x = Array1::from_iter((0..6).map(|i| i as f64 * 0.3 - 0.7));
        let a = predict(&p, x.view(), &MaskContext::new(6, &[4, 0, 2]).unwrap()).unwrap();
        let b = predict(&p, x.view(), &MaskContext::new(6, &[2, 4, 0]).unwrap()).unwrap();
        for (ra, rb) in a.raw().iter().zip(b.raw()) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn unobserved_values_do_not_leak() {
        let cfg = ModelConfig::mog(3, &[4], 2);
        let p = Parameters::<f64>::init(&cfg, &mut Rng::new(5)).unwrap();
        let ctx = MaskContext::new(3, &[1]).unwrap();
        let a = predict(&p, array![5.0, 0.2, -3.0].view(), &ctx).unwrap();
        let b = predict(&p, array![-1.0, 0.2, 9.0].view(), &ctx).unwrap();
        assert_eq!(a.raw(), b.raw());
    }
}
