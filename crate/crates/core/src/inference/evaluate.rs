use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::model::{
    binary_log_prob, hidden_stack, mog_log_density, HeadKind, Ordering, Parameters,
};
use crate::numerics::LogDensity;
use crate::scalar::Real;

/// Rows evaluated together; bounds the size of the activation matrices.
pub(crate) const CHUNK: usize = 512;

/// Running first-layer state of a batch walking along one ordering.
///
/// After `observe(i, values)` the pre-activation equals what the first layer
/// would compute from the masked input with `i` added to the observed set.
pub(crate) struct PrefixState<'p, T> {
    params: &'p Parameters<T>,
    pre1: Array2<T>,
}

impl<'p, T: Real> PrefixState<'p, T> {
    pub(crate) fn new(params: &'p Parameters<T>, rows: usize) -> Self {
        let bias = &params.input.bias;
        let pre1 = bias
            .view()
            .insert_axis(Axis(0))
            .broadcast((rows, bias.len()))
            .expect("broadcast bias")
            .to_owned();
        PrefixState { params, pre1 }
    }

    pub(crate) fn observe(&mut self, dim: usize, values: ArrayView1<T>) {
        let cfg = self.params.config();
        let w = &self.params.input.weight;
        let data_col = w.column(dim);
        let mask_col = cfg.input_masks.then(|| w.column(cfg.dim + dim));
        for (mut row, &v) in self.pre1.outer_iter_mut().zip(values) {
            if v != T::zero() {
                row.scaled_add(v, &data_col);
            }
            if let Some(m) = &mask_col {
                row += m;
            }
        }
    }

    /// Raw head outputs for dimension `dim`: one `rows x K` block per head tensor.
    pub(crate) fn head_for(&self, dim: usize) -> Result<Vec<Array2<T>>> {
        let (_, hidden) = hidden_stack(self.params, self.pre1.clone())?;
        let top = hidden.last().expect("non-empty");
        let k = self.params.config().components();
        let rows = dim * k..(dim + 1) * k;
        let blocks: Vec<Array2<T>> = self
            .params
            .head
            .iter()
            .map(|layer| {
                let mut z = top.dot(&layer.weight.slice(s![rows.clone(), ..]).t());
                z += &layer.bias.slice(s![rows.clone()]);
                z
            })
            .collect();
        if blocks.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteActivation {
                layer: self.params.config().n_layers() + 1,
            });
        }
        Ok(blocks)
    }

    /// `log p(x_dim = values[n] | prefix)` for every row.
    pub(crate) fn log_conditionals(&self, dim: usize, values: ArrayView1<T>) -> Result<Array1<T>> {
        let blocks = self.head_for(dim)?;
        let out = match self.params.config().head {
            HeadKind::Binary => Array1::from_iter(
                blocks[0].column(0).iter().zip(values).map(|(&a, &x)| binary_log_prob(a, x)),
            ),
            HeadKind::Mog { .. } => Array1::from_iter((0..values.len()).map(|n| {
                mog_log_density(
                    blocks[0].row(n).as_slice().expect("row"),
                    blocks[1].row(n).as_slice().expect("row"),
                    blocks[2].row(n).as_slice().expect("row"),
                    values[n],
                )
            })),
        };
        Ok(out)
    }
}

pub(crate) fn check_rows<T: Real>(params: &Parameters<T>, xs: &ArrayView2<T>, order: &Ordering) -> Result<()> {
    let dim = params.config().dim;
    if xs.ncols() != dim {
        return Err(Error::shape(format!("{dim} columns"), format!("{} columns", xs.ncols())));
    }
    if order.dim() != dim {
        return Err(Error::Ordering(format!(
            "ordering has {} entries, model has {dim} dimensions",
            order.dim()
        )));
    }
    Ok(())
}

/// `log p(x_{o_d} | x_{o_<d})` for positions `d` in `positions`, one row per example.
///
/// Values at positions past `positions.end` are never read.
pub fn ordered_conditionals<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    order: &Ordering,
    positions: Range<usize>,
) -> Result<Array2<T>> {
    check_rows(params, &xs, order)?;
    if positions.end > order.dim() || positions.start > positions.end {
        return Err(Error::Ordering(format!(
            "position range {positions:?} outside 0..{}",
            order.dim()
        )));
    }
    let mut out = Array2::zeros((xs.nrows(), positions.len()));
    for (chunk_idx, chunk) in xs.axis_chunks_iter(Axis(0), CHUNK).enumerate() {
        let base = chunk_idx * CHUNK;
        let mut state = PrefixState::new(params, chunk.nrows());
        for d in 0..positions.end {
            let dim = order.at(d);
            let col = chunk.column(dim);
            if d >= positions.start {
                let lc = state.log_conditionals(dim, col)?;
                out.slice_mut(s![base..base + chunk.nrows(), d - positions.start])
                    .assign(&lc);
            }
            if d + 1 < positions.end {
                state.observe(dim, col);
            }
        }
    }
    Ok(out)
}

/// `log p(x | o)` for every row of `xs`.
pub fn logdensities<T: Real>(params: &Parameters<T>, xs: ArrayView2<T>, order: &Ordering) -> Result<Array1<T>> {
    let dim = order.dim();
    Ok(ordered_conditionals(params, xs, order, 0..dim)?.sum_axis(Axis(1)))
}

/// `log p(x | o)`: the sum of the `D` conditionals along `o`.
pub fn logdensity<T: Real>(params: &Parameters<T>, x: ArrayView1<T>, order: &Ordering) -> Result<LogDensity<T>> {
    let xs = x.insert_axis(Axis(0));
    Ok(LogDensity(logdensities(params, xs, order)?[0]))
}

/// Sum of the conditionals at positions `positions` of `order`.
pub fn prefix_logdensities<T: Real>(
    params: &Parameters<T>,
    xs: ArrayView2<T>,
    order: &Ordering,
    positions: Range<usize>,
) -> Result<Array1<T>> {
    Ok(ordered_conditionals(params, xs, order, positions)?.sum_axis(Axis(1)))
}
