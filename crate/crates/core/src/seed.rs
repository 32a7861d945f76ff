//! Seed derivation.
//!
//! Every stochastic operation receives an explicit `u64` seed and builds a
//! [`ChaCha8Rng`] from it. Composite runs expand one master seed into
//! independent sub-seeds with [`sub_seed`]: the triple `(master, purpose,
//! index)` is folded through the SplitMix64 finalizer, so adding a new purpose
//! or a new trial never perturbs the draws of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Well-known purpose tags for [`sub_seed`].
pub mod purpose {
    pub const TRAINING_POSITION: u64 = 1;
    pub const TEST_POSITION: u64 = 2;
    pub const EXCITATION: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const CLUSTERING: u64 = 5;
    pub const DATASET: u64 = 6;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for draw `index` of stream `purpose` under `master`.
pub fn sub_seed(master: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ purpose) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
