//! Seeding helpers shared by every stochastic component.
//!
//! All randomness flows through [`seeded`], which wraps ChaCha8. Its output
//! stream is fixed by the algorithm, so results do not depend on the
//! platform or on the `rand` version's choice of `StdRng`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit mix of a list of words.
///
/// `h0 = 0x5EED_5EED_5EED_5EED`, then for every part `h = splitmix64(h ^ part)`.
/// The format is part of the results contract: changing it changes every
/// recorded seed.
pub fn stable_hash(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5EED_5EED_5EED_5EED_u64, |h, &p| splitmix64(h ^ p))
}
