//! Portable random streams.
//!
//! All randomness goes through [`SimRng`], a ChaCha8 stream keyed from a
//! 64-bit seed. The derivations below are fixed so that results replicate
//! across implementations:
//!
//! * key: four consecutive SplitMix64 outputs of the seed, little-endian;
//! * uniform: `(next_u64 >> 11) * 2^-53`;
//! * integer in `0..=n`: high 64 bits of `next_u64 * (n + 1)`;
//! * child seed `i` of a master seed: the `(i + 1)`-th SplitMix64 output
//!   started from the master seed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 output number `k` (0-based) of the stream started at `state`.
pub fn splitmix64(state: u64, k: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN_GAMMA.wrapping_mul(k + 1)))
}

/// Seed of repetition `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master, index)
}

#[derive(Debug, Clone)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        for (k, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(seed, k as u64).to_le_bytes());
        }
        SimRng(ChaCha8Rng::from_seed(key))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Integer in `0..=n`.
    #[inline]
    pub fn up_to(&mut self, n: u32) -> u32 {
        ((u128::from(self.next_u64()) * (u128::from(n) + 1)) >> 64) as u32
    }
}
