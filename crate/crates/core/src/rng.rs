//! Seed derivation for the scenario's independent random streams.
//!
//! Every stream (virtual-stop sampling, demand synthesis, each traveler's mode
//! draws, fleet placement) is keyed by the master seed plus a role tag and an
//! index, so streams stay disjoint: re-running one component, or skipping a
//! traveler's draw, never perturbs anyone else's randomness.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a well-mixed 64-bit permutation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a stream seed from `(master, tag, k)`. Pure and platform-independent.
pub fn derive_seed(master: u64, tag: &str, k: u64) -> u64 {
    let mut h = splitmix64(master);
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ k)
}

/// Fresh ChaCha stream for role `tag`, index `k`.
pub fn stream(master: u64, tag: &str, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, k))
}

/// The per-traveler mode-draw stream. Identical `(master, rq_id)` always
/// yields an identical stream.
pub fn traveler_stream(master: u64, rq_id: u64) -> ChaCha8Rng {
    stream(master, "traveler", rq_id)
}
