//! Seeded, splittable random streams.
//!
//! Every stochastic routine in the crate takes an explicit generator. Streams
//! are derived from a master seed and a path of indices, so that e.g. replicate
//! `r` of cell `c` can be regenerated in isolation from `(seed, [c, r])`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Child stream at `path`. Distinct paths give statistically independent generators.
    pub fn child(&self, path: &[u64]) -> SeedStream {
        let mut state = splitmix64(self.master);
        for &p in path {
            state = splitmix64(state ^ splitmix64(p.wrapping_add(GOLDEN_GAMMA)));
        }
        SeedStream { master: state }
    }

    pub fn rng(&self) -> SimRng {
        let mut seed = [0u8; 32];
        let mut state = self.master;
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        SimRng::from_seed(seed)
    }

    pub fn rng_at(&self, path: &[u64]) -> SimRng {
        self.child(path).rng()
    }
}

/// Shorthand for a generator seeded directly from `seed`.
pub fn seeded(seed: u64) -> SimRng {
    SeedStream::new(seed).rng()
}
