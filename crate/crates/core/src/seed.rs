//! Named sub-seeds derived from one global seed, so each random component
//! (demand noise, clustering, weight init, exploration, replay sampling) can
//! be re-seeded independently of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const DEMAND: &str = "demand";
pub const CLUSTERING: &str = "clustering";
pub const NET_INIT: &str = "net-init";
pub const NOISE: &str = "noise";
pub const SAMPLING: &str = "sampling";

/// First 8 bytes (little-endian) of `SHA-256(seed_le || name)`.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, name))
}
