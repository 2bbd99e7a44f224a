//! Counter-based Gaussian noise.
//!
//! Every increment is addressed by `(seed, particle, step)`: the particle
//! picks a ChaCha stream and the step a fixed word offset inside it. The
//! value therefore does not depend on how many other particles exist, in
//! which order they are updated, or on how many workers run the update.
//! Initial positions are drawn from a separate region of the same stream.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// 32-bit words reserved per step; a normal draw uses 2 in the common case.
const WORDS_PER_STEP: u128 = 64;
/// Word offset of the initial-condition region, past any reachable step.
const INIT_OFFSET: u128 = 1 << 60;

#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    base: ChaCha8Rng,
    /// particle `i` reads substream `map[i]`
    map: Option<Arc<Vec<usize>>>,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
            map: None,
        }
    }

    /// Same streams, relabelled: particle `i` reads substream `perm[i]`.
    pub fn permuted(seed: u64, perm: Vec<usize>) -> Self {
        Self {
            map: Some(Arc::new(perm)),
            ..Self::new(seed)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, particle: usize) -> ParticleStream {
        let mut rng = self.base.clone();
        let id = match &self.map {
            Some(m) => m[particle],
            None => particle,
        };
        rng.set_stream(id as u64);
        ParticleStream { rng }
    }

    /// Standard normal increment for `(particle, step)`.
    pub fn increment(&self, particle: usize, step: usize) -> f64 {
        self.stream(particle).increment(step)
    }
}

#[derive(Debug, Clone)]
pub struct ParticleStream {
    rng: ChaCha8Rng,
}

impl ParticleStream {
    #[inline]
    pub fn increment(&mut self, step: usize) -> f64 {
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        StandardNormal.sample(&mut self.rng)
    }

    /// Generator positioned at the start of the initial-condition region.
    pub fn init_rng(&mut self) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(INIT_OFFSET);
        &mut self.rng
    }
}

/// Independent child seed for replica `index` of a study.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
