//! Seed splitting. Every random choice in a run derives from one 64-bit root
//! seed plus a counter, so sub-algorithms can be replayed individually.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the `index`-th child seed of `root`.
pub fn child_seed(root: u64, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(index.wrapping_add(1)))
}

#[derive(Debug, Clone)]
pub struct SeedStream {
    root: u64,
    counter: u64,
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        SeedStream { root, counter: 0 }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn issued(&self) -> u64 {
        self.counter
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = child_seed(self.root, self.counter);
        self.counter += 1;
        s
    }

    pub fn next_rng(&mut self) -> SolverRng {
        SolverRng::seed_from_u64(self.next_seed())
    }
}

pub fn rng_from_seed(seed: u64) -> SolverRng {
    SolverRng::seed_from_u64(seed)
}
