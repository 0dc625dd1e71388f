use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::model::Ordering;

/// Identifier of the pinned generator. Bump when the stream definition changes.
pub const RNG_ALGORITHM: &str = "chacha20/splitmix-keyed/v1";

/// Seeded, byte-reproducible random stream.
///
/// Substreams keyed by `(tag, index)` are derived from the root seed alone, so
/// they do not depend on how much of the parent stream has been consumed.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha20Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn key_from(seed: u64, salt: u64) -> [u8; 32] {
    let mut state = seed ^ salt.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha20Rng::from_seed(key_from(seed, 0)),
        }
    }

    /// Seeds from operating-system entropy. Only the seed is random; record it for replay.
    pub fn from_entropy() -> Self {
        Self::new(rand::rng().next_u64())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for `(tag, index)`.
    pub fn substream(&self, tag: &str, index: u64) -> Rng {
        let mut inner = ChaCha20Rng::from_seed(key_from(self.seed, fnv1a(tag.as_bytes()) | 1));
        inner.set_stream(index);
        Rng {
            seed: self.seed,
            inner,
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on {0, .., n-1}. Panics when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniformly random permutation of `0..dim`.
pub fn sample_permutation(rng: &mut Rng, dim: usize) -> Ordering {
    let mut perm: Vec<usize> = (0..dim).collect();
    rng.shuffle(&mut perm);
    Ordering::from_perm_unchecked(perm)
}

/// Uniformly random `size`-subset of `0..dim`, returned in draw order.
///
/// Panics when `size > dim`.
pub fn sample_subset(rng: &mut Rng, dim: usize, size: usize) -> Vec<usize> {
    assert!(size <= dim, "subset size {size} exceeds dimension {dim}");
    let mut pool: Vec<usize> = (0..dim).collect();
    for i in 0..size {
        let j = i + rng.below(dim - i);
        pool.swap(i, j);
    }
    pool.truncate(size);
    pool
}
