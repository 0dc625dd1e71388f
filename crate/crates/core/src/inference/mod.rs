//! Exact density evaluation, prefix queries, ancestral sampling, imputation
//! and ensembles for a trained model.
//!
//! Every routine walks an ordering left to right and keeps the first hidden
//! layer's pre-activation up to date incrementally: observing dimension `i`
//! adds `x_i W[:, i]` and, with input masks, the mask column `W[:, D + i]`.
//! Deeper layers and the head are recomputed at each step.

mod ensemble;
mod evaluate;
mod query;
mod sampling;

pub use ensemble::{
    avg_test_loglik, ensemble_logdensities, ensemble_logdensity, mix_logliks, ordering_logliks,
    EnsembleSpec, EvalReport,
};
pub use evaluate::{logdensities, logdensity, ordered_conditionals, prefix_logdensities};
pub use query::{query_logdensity, query_logdensity_with, Query};
pub use sampling::{complete_batch, impute, sample, sample_ensemble, sample_n, Imputation};

#[cfg(test)]
mod tests;
