//! Named, hierarchical random streams derived from one master seed.
//!
//! Every random decision in a build draws from a generator whose seed is a
//! hash of `(master seed, stream name, path components)`. Work items therefore
//! see the same numbers whatever order or thread they run on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derives a 64-bit seed from a parent seed and a list of labels.
pub fn derive_seed(master: u64, stream: &str, path: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stream.as_bytes());
    for p in path {
        h.update([0u8]);
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

pub fn stream(master: u64, stream: &str, path: &[&str]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, stream, path))
}

pub fn from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
