//! Seeded, splittable random streams.
//!
//! A [`Stream`] is a 64-bit key. Splitting derives a child key by mixing the
//! parent key with an index, so the streams handed to replications, spokes or
//! worker blocks depend only on `(master seed, path of indices)` and never on
//! scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator type produced by [`Stream::rng`].
pub type StreamRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    seed: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream number `index`. Distinct indices give unrelated keys.
    pub fn split(&self, index: u64) -> Stream {
        let a = splitmix64(self.seed ^ 0x6a09_e667_f3bc_c909);
        let b = splitmix64(index.wrapping_add(0xbb67_ae85_84ca_a73b));
        Stream {
            seed: splitmix64(a ^ b.rotate_left(17)),
        }
    }

    pub fn rng(&self) -> StreamRng {
        Xoshiro256PlusPlus::seed_from_u64(self.seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
