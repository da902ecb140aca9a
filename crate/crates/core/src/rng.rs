//! Reproducible random streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by
//! `(master seed, domain)` and positioned on stream `index`, so the values a
//! task sees depend only on its coordinates, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags that keep substreams for different jobs disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Packing = 1,
    TypeOne = 2,
    TypeTwoPairs = 3,
    TypeTwoTrials = 4,
    Verify = 5,
    User = 6,
}

/// Keyed factory for independent generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    seed: u64,
    domain: u64,
}

impl StreamKey {
    pub fn new(seed: u64, domain: Domain) -> Self {
        Self {
            seed,
            domain: domain as u64,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for substream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&splitmix64(self.seed).to_le_bytes());
        key[8..16].copy_from_slice(&splitmix64(self.seed ^ 0x9e37_79b9_7f4a_7c15).to_le_bytes());
        key[16..24].copy_from_slice(&splitmix64(self.domain).to_le_bytes());
        key[24..].copy_from_slice(&self.seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Child key for a nested task, e.g. one sampled pair inside a run.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(self.seed.wrapping_add(splitmix64(index))),
            domain: self.domain,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
