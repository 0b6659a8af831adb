//! Random streams for the simulation code.
//!
//! Every chain draws from a xoshiro256++ generator. A replica's stream is
//! seeded with `mix64(master_seed, replica_index)`, where `mix64` is the
//! SplitMix64 finaliser applied to the seed offset by the index times the
//! golden-ratio increment; the 256-bit state is then expanded from that
//! word by SplitMix64 (`seed_from_u64`). Vertex indices use Lemire's
//! multiply-and-reject method and uniforms take the top 53 bits of a draw,
//! so every value is a fixed function of the seed.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type ChainRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser of `seed + (index + 1) * gamma`.
pub fn mix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replica `index` of a run seeded with `master`.
pub fn stream(master: u64, index: u64) -> ChainRng {
    ChainRng::seed_from_u64(mix64(master, index))
}

/// Uniform integer in `0..bound` without modulo bias.
#[inline]
pub fn uniform_index<R: RngCore>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let range = bound as u64;
    let mut m = u128::from(rng.next_u64()) * u128::from(range);
    let mut low = m as u64;
    if low < range {
        let threshold = range.wrapping_neg() % range;
        while low < threshold {
            m = u128::from(rng.next_u64()) * u128::from(range);
            low = m as u64;
        }
    }
    (m >> 64) as usize
}

/// Uniform real in `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
