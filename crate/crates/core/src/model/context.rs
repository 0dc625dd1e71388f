use crate::error::{Error, Result};

/// A permutation of the `D` variable indices (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            if i >= perm.len() {
                return Err(Error::Ordering(format!(
                    "index {i} out of range for dimension {}",
                    perm.len()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Ordering(format!("index {i} repeated")));
            }
        }
        Ok(Ordering { perm })
    }

    pub(crate) fn from_perm_unchecked(perm: Vec<usize>) -> Self {
        Ordering { perm }
    }

    pub fn identity(dim: usize) -> Self {
        Ordering {
            perm: (0..dim).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Dimension at position `d` (0-based position).
    pub fn at(&self, d: usize) -> usize {
        self.perm[d]
    }

    /// Context for predicting position `d` (0-based): the first `d` entries are observed.
    pub fn context(&self, d: usize) -> MaskContext {
        MaskContext::from_indices_unchecked(self.perm.len(), &self.perm[..d])
    }
}

/// The observed set `o_<d` of a training or evaluation step, stored as a mask.
///
/// Storage is a dense boolean mask, so two contexts built from the same set in
/// different orders are identical.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MaskContext {
    mask: Vec<bool>,
    n_observed: usize,
}

impl MaskContext {
    pub fn new(dim: usize, observed: &[usize]) -> Result<Self> {
        let mut mask = vec![false; dim];
        for &i in observed {
            if i >= dim {
                return Err(Error::Context(format!(
                    "observed index {i} out of range for dimension {dim}"
                )));
            }
            if std::mem::replace(&mut mask[i], true) {
                return Err(Error::Context(format!("observed index {i} repeated")));
            }
        }
        Ok(MaskContext {
            mask,
            n_observed: observed.len(),
        })
    }

    pub(crate) fn from_indices_unchecked(dim: usize, observed: &[usize]) -> Self {
        let mut mask = vec![false; dim];
        for &i in observed {
            mask[i] = true;
        }
        MaskContext {
            mask,
            n_observed: observed.len(),
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let n_observed = mask.iter().filter(|&&m| m).count();
        MaskContext { mask, n_observed }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_mask(vec![false; dim])
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    /// 1-based position of the next variable in the ordering: `|o_<d| + 1`.
    pub fn d(&self) -> usize {
        self.n_observed + 1
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn observed(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn unobserved(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| !m).map(|(i, _)| i)
    }

    /// Loss rescale `D / (D - d + 1)`, i.e. D over the number of unobserved dimensions.
    ///
    /// Panics when every dimension is observed (`d = D + 1` is not a training context).
    pub fn rescale(&self) -> f64 {
        let remaining = self.dim() - self.n_observed;
        assert!(remaining > 0, "context observes every dimension");
        self.dim() as f64 / remaining as f64
    }
}
