use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::evaluate::{prefix_logdensities, PrefixState, CHUNK};
use crate::error::{Error, Result};
use crate::model::{HeadKind, MoGParams, Ordering, Parameters};
use crate::numerics::{sigmoid, LogDensity, Rng};
use crate::scalar::Real;

/// Ancestral sampling of positions `start..D` of `order` for every row of `xs`.
///
/// Entries at positions before `start` are read as the conditioning values;
/// the rest are overwritten.
pub fn complete_batch<T: Real>(
    params: &Parameters<T>,
    xs: &mut Array2<T>,
    order: &Ordering,
    start: usize,
    rng: &mut Rng,
) -> Result<()> {
    let dim = params.dim();
    if xs.ncols() != dim || order.dim() != dim {
        return Err(Error::shape(dim, format!("{} columns, ordering of {}", xs.ncols(), order.dim())));
    }
    if start > dim {
        return Err(Error::Ordering(format!("start {start} beyond dimension {dim}")));
    }
    let head = params.config().head;
    for mut chunk in xs.axis_chunks_iter_mut(Axis(0), CHUNK) {
        let mut state = PrefixState::new(params, chunk.nrows());
        for d in 0..start {
            let i = order.at(d);
            state.observe(i, chunk.column(i));
        }
        for d in start..dim {
            let i = order.at(d);
            let blocks = state.head_for(i)?;
            for n in 0..chunk.nrows() {
                chunk[[n, i]] = match head {
                    HeadKind::Binary => {
                        if rng.uniform() < sigmoid(blocks[0][[n, 0]]).f64() {
                            T::one()
                        } else {
                            T::zero()
                        }
                    }
                    HeadKind::Mog { .. } => {
                        let mix = MoGParams::from_raw(
                            blocks[0].row(n).as_slice().expect("row"),
                            blocks[1].row(n).as_slice().expect("row"),
                            blocks[2].row(n).as_slice().expect("row"),
                        )?;
                        mix.sample(rng)
                    }
                };
            }
            if d + 1 < dim {
                state.observe(i, chunk.column(i));
            }
        }
    }
    Ok(())
}

/// One ancestral sample along `order`.
pub fn sample<T: Real>(params: &Parameters<T>, order: &Ordering, rng: &mut Rng) -> Result<Array1<T>> {
    Ok(sample_n(params, order, 1, rng)?.row(0).to_owned())
}

/// `n` ancestral samples along `order`, one per row.
pub fn sample_n<T: Real>(params: &Parameters<T>, order: &Ordering, n: usize, rng: &mut Rng) -> Result<Array2<T>> {
    let mut xs = Array2::zeros((n, params.dim()));
    complete_batch(params, &mut xs, order, 0, rng)?;
    Ok(xs)
}

/// `n` samples from the ensemble: each sample picks one ordering uniformly.
pub fn sample_ensemble<T: Real>(
    params: &Parameters<T>,
    orderings: &[Ordering],
    n: usize,
    rng: &mut Rng,
) -> Result<(Array2<T>, Vec<usize>)> {
    if orderings.is_empty() {
        return Err(Error::Ordering("empty ensemble".into()));
    }
    let picks: Vec<usize> = (0..n).map(|_| rng.below(orderings.len())).collect();
    let mut xs = Array2::zeros((n, params.dim()));
    for (k, order) in orderings.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&r| picks[r] == k).collect();
        if rows.is_empty() {
            continue;
        }
        let block = sample_n(params, order, rows.len(), rng)?;
        for (b, &r) in rows.iter().enumerate() {
            xs.row_mut(r).assign(&block.row(b));
        }
    }
    Ok((xs, picks))
}

/// Result of [`impute`].
#[derive(Clone, Debug)]
pub struct Imputation<T> {
    /// Ordering used: observed dimensions first.
    pub ordering: Ordering,
    /// `log p(x_observed)` with the missing dimensions marginalized.
    pub marginal: LogDensity<T>,
    /// Full vectors: observed entries copied, missing entries sampled.
    pub completions: Array2<T>,
}

/// Marginal density of the observed entries and `n_samples` completions of the rest.
pub fn impute<T: Real>(
    params: &Parameters<T>,
    x: ArrayView1<T>,
    observed: &[usize],
    rng: &mut Rng,
    n_samples: usize,
) -> Result<Imputation<T>> {
    let dim = params.dim();
    if x.len() != dim {
        return Err(Error::shape(dim, x.len()));
    }
    let mut is_obs = vec![false; dim];
    for &i in observed {
        if i >= dim || std::mem::replace(&mut is_obs[i], true) {
            return Err(Error::Query(format!("bad observed index {i}")));
        }
    }
    let mut first: Vec<usize> = observed.to_vec();
    let mut rest: Vec<usize> = (0..dim).filter(|&i| !is_obs[i]).collect();
    rng.shuffle(&mut first);
    rng.shuffle(&mut rest);
    let a = first.len();
    first.extend(rest);
    let ordering = Ordering::new(first)?;

    let mut clean = Array1::zeros(dim);
    for &i in observed {
        clean[i] = x[i];
    }
    let marginal = if a == 0 {
        T::zero()
    } else {
        prefix_logdensities(params, clean.view().insert_axis(Axis(0)), &ordering, 0..a)?[0]
    };
    let mut completions = Array2::zeros((n_samples, dim));
    for mut row in completions.outer_iter_mut() {
        row.assign(&clean);
    }
    if a < dim {
        complete_batch(params, &mut completions, &ordering, a, rng)?;
    }
    Ok(Imputation {
        ordering,
        marginal: LogDensity(marginal),
        completions,
    })
}
