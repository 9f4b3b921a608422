//! Seed derivation and stream handling.
//!
//! Every random consumer gets its own ChaCha stream derived from a
//! `(seed, stream)` pair, so serial and parallel executions of the same
//! configuration consume identical randomness. Child seeds (one per
//! replication or batch) are derived with a SplitMix-style hash, which keeps
//! the per-replication generators statistically independent of each other
//! and of the master seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Logical stream labels. Distinct consumers of the same seed draw from
/// distinct ChaCha streams and never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Point coordinate sampling.
    Points = 0,
    /// Arrival process and join decisions in the event simulation.
    Events = 1,
    /// Outer samples of the ball-union integrals.
    McOuter = 2,
    /// Inner volume estimation samples.
    McInner = 3,
}

/// SplitMix64 finalizer; the standard 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for child `label` (replication index, batch index, ...)
/// of `master`. Deterministic, and injective enough for any practical label
/// count.
pub fn child_seed(master: u64, label: u64) -> u64 {
    mix64(master ^ mix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// A generator for one `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
