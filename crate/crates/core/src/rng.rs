//! Seed derivation. Every random stream in a run is derived from one master
//! seed so that a `(scenario, seed)` pair fixes every emitted number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used with [`ChaCha8Rng::set_stream`] inside one episode.
pub(crate) const STREAM_PLACEMENT: u64 = 0;
pub(crate) const STREAM_UE_BASE: u64 = 1 << 32;

/// SplitMix64 finalizer over `base ^ tag`, used to derive independent seeds.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Tags for [`derive_seed`].
pub(crate) mod tag {
    pub const TRAIN_EPISODE: u64 = 0x7472_6169_6e00_0000;
    pub const TRAIN_AGENT: u64 = 0x6167_656e_7400_0000;
}
