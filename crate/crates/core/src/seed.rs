//! Deterministic seed derivation.
//!
//! Every random stream in the crate is keyed by a root seed plus a path of
//! indices (subject, fold, tree, ...), so parallel and serial schedules draw
//! identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(0xA5A5_A5A5))))
}

pub fn rng(root: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(root, path))
}
