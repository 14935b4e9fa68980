//! Seeded uniform stream shared by random tags and the group-law audit.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Each draw takes the top 53 bits of one
//! `next_u64` output and scales by `2^-53`, giving a value in `[0, 1)`.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier of the pseudorandom algorithm, reported alongside audit results.
pub const ALGORITHM: &str = "chacha8/seed_from_u64/u64>>11*2^-53";

#[derive(Debug, Clone)]
pub struct UnitStream(ChaCha8Rng);

impl UnitStream {
    pub fn new(seed: u64) -> Self {
        UnitStream(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Next value in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Next value in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_unit() * (hi - lo)
    }

    /// Next integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        let span = (hi - lo + 1) as u64;
        lo + (self.0.next_u64() % span) as usize
    }
}
