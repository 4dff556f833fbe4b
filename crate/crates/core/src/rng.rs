//! Seed derivation.
//!
//! Every random stream in a scenario descends from a single root seed. A
//! child seed is obtained by folding a sequence of `(tag, index)` labels into
//! the root with the SplitMix64 finalizer, so streams are independent of the
//! order in which they are consumed. Each derived seed initializes its own
//! `ChaCha8Rng`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used by the scenario runner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Block = 1,
    Symbols = 2,
    Noise = 3,
    Neighbor = 4,
    NeighborSymbols = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` for the labelled stream `index`.
pub fn derive_seed(parent: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(parent ^ (stream as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(a ^ index.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
