//! Seeded random streams.
//!
//! Every random draw in the crate flows through [`stream_rng`], a ChaCha8
//! generator addressed by `(seed, stream)`. Each component draws from its own
//! stream so that, e.g., regenerating a channel never perturbs the noise
//! realizations of an estimation run. Streams in use:
//!
//! | stream | purpose |
//! |-------:|---------|
//! | [`CHANNEL_STREAM`] | IID Rayleigh channel entries |
//! | [`NOISE_STREAM`] | uplink receiver noise |
//! | [`INIT_STREAM`] | semi-unitary initializations for the manifold descent |
//! | [`PHASE_STREAM`] | phase initializations for the baseline optimizer |

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CHANNEL_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;
pub const INIT_STREAM: u64 = 2;
pub const PHASE_STREAM: u64 = 3;

/// ChaCha8 generator for the given seed and stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.into());
    rng
}

/// Deterministic sub-seed derivation (SplitMix64 over the mixed-in words).
///
/// Used to give independent work items (restarts, sweep trials) their own
/// seeds in a way that does not depend on execution order.
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut z = base;
    for &w in words {
        z = splitmix64(z ^ splitmix64(w));
    }
    splitmix64(z)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
