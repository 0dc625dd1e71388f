use crate::model::MaskContext;
use crate::numerics::{sample_subset, Rng};

/// Draws `d` uniformly from `1..=dim`, then a uniform observed set of size `d - 1`.
pub fn sample_context(rng: &mut Rng, dim: usize) -> MaskContext {
    assert!(dim >= 1, "context needs at least one dimension");
    let d = 1 + rng.below(dim);
    let observed = sample_subset(rng, dim, d - 1);
    MaskContext::new(dim, &observed).expect("subset is valid")
}

/// One independent context per example.
pub fn sample_contexts(rng: &mut Rng, dim: usize, n: usize) -> Vec<MaskContext> {
    (0..n).map(|_| sample_context(rng, dim)).collect()
}
