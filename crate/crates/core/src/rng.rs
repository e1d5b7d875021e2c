//! Seed derivation.
//!
//! Every random decision comes from a ChaCha8 stream. A tree with index `t`
//! in a forest with master seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! switched to stream `t`, so each tree's randomness depends only on `(s, t)`
//! and never on which worker builds it or in what order.
//!
//! Independent stages (guide forest, selector forest, replicate splits) get
//! their own master seeds through [`derive_seed`], a SplitMix64 mix of the
//! parent seed and a stage tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TreeRng = ChaCha8Rng;

/// Stream for tree `index` under `master_seed`.
pub fn tree_rng(master_seed: u64, index: u64) -> TreeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn seeded(seed: u64) -> TreeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stage `tag` of a computation seeded with `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Stage tags used by the pipeline and the harness.
pub mod tags {
    pub const GUIDE: u64 = 1;
    pub const SELECTOR: u64 = 2;
    pub const FINAL: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const REPLICATE: u64 = 5;
}
