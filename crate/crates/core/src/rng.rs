//! Seeded randomness.
//!
//! Every random draw in the crate descends from one `u64` seed through the
//! SplitMix64 generator. Independent sample streams are derived by hashing
//! `(seed, stream index)` with the SplitMix64 finalizer, so sample `i` is the
//! same no matter which thread draws it.

use rand::{Rng, SeedableRng};
pub use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seeded directly from `seed`.
pub fn seeded(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Generator for sample stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))))
}

/// Uniform draw on `[lo, hi)`: `lo + (hi - lo) * u` with `u = (next_u64 >> 11) * 2^-53`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Uniform index in `0..n` (n > 0).
#[inline]
pub fn index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((uniform(rng, 0.0, 1.0) * n as f64) as usize).min(n - 1)
}
