//! The single-context order-agnostic loss and its gradient.

use ndarray::{Array2, ArrayView1, ArrayView2};

use super::config::HeadKind;
use super::context::MaskContext;
use super::head::{binary_nll_grad, mog_log_density, mog_nll_grad};
use super::network::{backward, forward, masked_inputs, Activations, RowSource};
use super::params::Parameters;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn wrap(index: usize, err: Error) -> Error {
    Error::Example {
        index,
        source: Box::new(err),
    }
}

/// Per-example losses and, when `out_grads` is given, `d(mean loss)/d(raw outputs)`.
///
/// Only unobserved dimensions contribute; rows of observed dimensions in the
/// output gradient stay exactly zero.
fn head_losses<T: Real>(
    head: HeadKind,
    xs: ArrayView2<T>,
    ctxs: &[MaskContext],
    acts: &Activations<T>,
    mut out_grads: Option<&mut [Array2<T>]>,
) -> Result<Vec<T>> {
    let n_rows = xs.nrows();
    let inv_n = T::one() / T::from_usize_lossy(n_rows);
    let mut losses = Vec::with_capacity(n_rows);
    let k = if let HeadKind::Mog { components } = head { components } else { 0 };
    let mut d_mix = [vec![T::zero(); k], vec![T::zero(); k], vec![T::zero(); k]];
    for (n, ctx) in ctxs.iter().enumerate() {
        let scale = T::c(ctx.rescale());
        let mut total = T::zero();
        for i in ctx.unobserved() {
            let x = xs[[n, i]];
            let nll = match head {
                HeadKind::Binary => {
                    let a = acts.outputs[0][[n, i]];
                    let (nll, g) = binary_nll_grad(a, x);
                    if let Some(grads) = out_grads.as_deref_mut() {
                        grads[0][[n, i]] = g * scale * inv_n;
                    }
                    nll
                }
                HeadKind::Mog { components: k } => {
                    let a = acts.outputs[0].span(n, i * k, k);
                    let mu = acts.outputs[1].span(n, i * k, k);
                    let ls = acts.outputs[2].span(n, i * k, k);
                    match out_grads.as_deref_mut() {
                        Some(grads) => {
                            let [d0, d1, d2] = &mut d_mix;
                            let nll = mog_nll_grad(a, mu, ls, x, d0, d1, d2);
                            for (g, d) in grads.iter_mut().zip(&d_mix) {
                                let cols = g.ncols();
                                let base = n * cols + i * k;
                                let dst = &mut g.as_slice_mut().expect("standard layout")[base..base + k];
                                for (o, &v) in dst.iter_mut().zip(d) {
                                    *o = v * scale * inv_n;
                                }
                            }
                            nll
                        }
                        None => -mog_log_density(a, mu, ls, x),
                    }
                }
            };
            if !nll.is_finite() {
                return Err(wrap(n, Error::NonFiniteLoss { dim: i }));
            }
            total += nll;
        }
        losses.push(scale * total);
    }
    Ok(losses)
}

fn check_batch<T: Real>(params: &Parameters<T>, xs: ArrayView2<T>, ctxs: &[MaskContext]) -> Result<()> {
    if xs.nrows() == 0 {
        return Err(Error::shape("a non-empty batch", "0 rows"));
    }
    if let Some((n, _)) = ctxs.iter().enumerate().find(|(_, c)| c.n_observed() >= params.dim()) {
        return Err(wrap(n, Error::Context("context observes every dimension".into())));
    }
    Ok(())
}

/// Per-example `Ĵ` values and the gradient of their mean.
pub fn batch_loss_and_gradient<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    ctxs: &[MaskContext],
) -> Result<(Vec<T>, Parameters<T>)> {
    check_batch(params, xs, ctxs)?;
    let inputs = masked_inputs(xs, ctxs, params.config())?;
    let acts = forward(params, inputs.view())?;
    let mut out_grads: Vec<Array2<T>> = acts.outputs.iter().map(|o| Array2::zeros(o.raw_dim())).collect();
    let losses = head_losses(params.config().head, xs, ctxs, &acts, Some(&mut out_grads))?;
    let grad = backward(params, inputs.view(), &acts, &out_grads);
    Ok((losses, grad))
}

/// Per-example `Ĵ` values without the backward pass.
pub fn batch_loss<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    ctxs: &[MaskContext],
) -> Result<Vec<T>> {
    check_batch(params, xs, ctxs)?;
    let inputs = masked_inputs(xs, ctxs, params.config())?;
    let acts = forward(params, inputs.view())?;
    head_losses(params.config().head, xs, ctxs, &acts, None)
}

/// `D/(D-d+1) * sum_{i unobserved} -log p(x_i | x_observed)` and its exact gradient.
pub fn masked_loss_and_gradient<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    ctx: &MaskContext,
) -> Result<(T, Parameters<T>)> {
    let xs = x.to_owned().insert_axis(ndarray::Axis(0));
    let (losses, grad) = batch_loss_and_gradient(params, xs.view(), std::slice::from_ref(ctx))
        .map_err(unwrap_single)?;
    Ok((losses[0], grad))
}

/// `Ĵ` for a single example and context.
pub fn masked_loss<T: Real>(params: &Parameters<T>, x: ArrayView1<T>, ctx: &MaskContext) -> Result<T> {
    let xs: Array2<T> = x.to_owned().insert_axis(ndarray::Axis(0));
    Ok(batch_loss(params, xs.view(), std::slice::from_ref(ctx)).map_err(unwrap_single)?[0])
}

fn unwrap_single(e: Error) -> Error {
    match e {
        Error::Example { source, .. } => *source,
        other => other,
    }
}

/// Flattened gradient helper for finite-difference checks.
pub fn loss_of_flat<T: Real>(
    template: &Parameters<T>,
    flat: &[T],
    x: ArrayView1<T>,
    ctx: &MaskContext,
) -> T {
    let mut p = template.clone();
    p.set_flat(flat).expect("flat length matches");
    masked_loss(&p, x, ctx).unwrap_or_else(|_| T::nan())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::numerics::{finite_diff_gradient, Rng};
    use ndarray::{array, Array1};

    #[test]
    fn zero_model_loss() {
        let cfg = ModelConfig::binary(4, &[3]);
        let p = Parameters::<f64>::zeros(&cfg).unwrap();
        let x = array![1.0, 0.0, 1.0, 1.0];
        // d=3: two unobserved dims, factor 4/2
        let ctx = MaskContext::new(4, &[0, 2]).unwrap();
        let (loss, _) = masked_loss_and_gradient(&p, x.view(), &ctx).unwrap();
        assert!((loss - 2.0 * 2.0 * std::f64::consts::LN_2).abs() < 1e-14);
        let (loss, _) = masked_loss_and_gradient(&p, x.view(), &MaskContext::empty(4)).unwrap();
        assert!((loss - 4.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn observed_head_rows_get_no_gradient() {
        for cfg in [ModelConfig::binary(5, &[4, 3]), ModelConfig::mog(5, &[4], 3)] {
            let p = Parameters::<f64>::init(&cfg, &mut Rng::new(12)).unwrap();
            let x = Array1::from_iter((0..5).map(|i| (i % 2) as f64));
            let ctx = MaskContext::new(5, &[1, 3]).unwrap();
            let (_, g) = masked_loss_and_gradient(&p, x.view(), &ctx).unwrap();
            let k = cfg.components();
            for head in &g.head {
                for i in [1usize, 3] {
                    for row in i * k..(i + 1) * k {
                        assert!(head.weight.row(row).iter().all(|&v| v == 0.0));
                        assert_eq!(head.bias[row], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(21);
        for cfg in [ModelConfig::binary(4, &[5]), ModelConfig::mog(4, &[5], 2)] {
            let p = Parameters::<f64>::init(&cfg, &mut rng).unwrap();
            let x = match cfg.head {
                HeadKind::Binary => array![1.0, 0.0, 0.0, 1.0],
                HeadKind::Mog { .. } => array![0.3, -1.2, 0.8, 0.05],
            };
            let ctx = MaskContext::new(4, &[2]).unwrap();
            let (_, g) = masked_loss_and_gradient(&p, x.view(), &ctx).unwrap();
            let fd = finite_diff_gradient(|t| loss_of_flat(&p, t, x.view(), &ctx), &p.to_flat(), 1e-5).unwrap();
            for (a, n) in g.to_flat().iter().zip(&fd) {
                assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-2) < 1e-6, "{a} vs {n}");
            }
        }
    }

    #[test]
    fn batch_gradient_is_mean_of_singles() {
        let cfg = ModelConfig::binary(3, &[4, 2]);
        let p = Parameters::<f64>::init(&cfg, &mut Rng::new(2)).unwrap();
        let xs = array![[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]];
        let ctxs = [MaskContext::new(3, &[0]).unwrap(), MaskContext::new(3, &[]).unwrap()];
        let (losses, g) = batch_loss_and_gradient(&p, xs.view(), &ctxs).unwrap();
        let (l0, g0) = masked_loss_and_gradient(&p, xs.row(0), &ctxs[0]).unwrap();
        let (l1, g1) = masked_loss_and_gradient(&p, xs.row(1), &ctxs[1]).unwrap();
        assert!((losses[0] - l0).abs() < 1e-14 && (losses[1] - l1).abs() < 1e-14);
        let mut mean = g0.clone();
        mean.scaled_add(1.0, &g1);
        mean.scale(0.5);
        for (a, b) in g.to_flat().iter().zip(mean.to_flat()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(batch_loss(&p, xs.view(), &ctxs).unwrap(), losses);
    }

    #[test]
    fn full_context_rejected() {
        let cfg = ModelConfig::binary(2, &[2]);
        let p = Parameters::<f64>::zeros(&cfg).unwrap();
        let ctx = MaskContext::new(2, &[0, 1]).unwrap();
        assert!(masked_loss_and_gradient(&p, array![0.0, 1.0].view(), &ctx).is_err());
    }
}
