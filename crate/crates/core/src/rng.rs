//! Seeded random streams.
//!
//! Every run owns one master generator built from the user's seed. Purpose
//! specific streams are forked from it in a fixed order (see [`Purpose`]), so
//! a new consumer of randomness appended at the end never shifts the draws
//! seen by existing ones.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Consumers of randomness in a training run, in fork order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Init = 0,
    BatchOrder = 1,
    TaskSampling = 2,
    TrainTransforms = 3,
    ValidationTransforms = 4,
    StaticTransforms = 5,
    Split = 6,
}

const PURPOSES: usize = 7;

/// Per-purpose streams derived from a single seed.
#[derive(Debug, Clone)]
pub struct SeedStreams {
    seeds: [u64; PURPOSES],
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        let mut master = seeded(seed);
        let mut seeds = [0u64; PURPOSES];
        for s in seeds.iter_mut() {
            *s = master.next_u64();
        }
        Self { seeds }
    }

    pub fn fork(&self, purpose: Purpose) -> Rng {
        seeded(self.seeds[purpose as usize])
    }

    /// The `index`-th independent ChaCha stream of a purpose. Keying draws by
    /// position (say, training step and task slot) keeps two runs that agree
    /// at that position on identical draws even after they diverge elsewhere.
    pub fn substream(&self, purpose: Purpose, index: u64) -> Rng {
        let mut rng = self.fork(purpose);
        rng.set_stream(index);
        rng
    }
}
