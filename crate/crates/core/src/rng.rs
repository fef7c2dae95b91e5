//! Keyed random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha` 0.9) whose 256-bit key
//! is the little-endian concatenation of `(seed, replicate, group, phase)`.
//! ChaCha is a keyed counter-mode function, so distinct keys give
//! independent streams and a stream depends only on its key. Work can
//! therefore be split across any number of threads without changing a
//! single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which part of a computation a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Phase {
    /// Simulated data: mixture selection and the two samples of a group.
    Data = 1,
    /// Whole-dataset bootstrap behind the Test 7 variance estimate.
    VarianceBootstrap = 2,
    /// Per-group null bootstrap for p-values.
    GroupBootstrap = 3,
    /// Monte Carlo null moments of classical statistics.
    Moments = 4,
    /// Seeds derived for nested computations inside a replicate.
    Derive = 5,
    Benchmark = 6,
}

/// Build the stream for one `(seed, replicate, group, phase)` key.
pub fn stream(seed: u64, replicate: u64, group: u64, phase: Phase) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    key[16..24].copy_from_slice(&group.to_le_bytes());
    key[24..32].copy_from_slice(&(phase as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// A 64-bit seed for a nested computation, derived from a parent key.
pub fn derive_seed(seed: u64, replicate: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stream(seed, replicate, tag, Phase::Derive).next_u64()
}

/// Seed from system entropy, for callers that did not pin one.
pub fn entropy_seed() -> u64 {
    rand::random()
}
