//! Seeded random streams.
//!
//! Every draw comes from a ChaCha8 stream keyed by
//! `SHA-256(seed, indices..., tag)`, so a stream for `(k, rep)` does not depend
//! on how many other problems or reps exist or on the execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Version of the stream-split function; bumped if the derivation changes.
pub const STREAM_VERSION: u32 = 1;

pub fn stream(seed: u64, indices: &[u64], tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(seed, indices, tag))
}

/// A child seed for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, indices: &[u64], tag: &str) -> u64 {
    let d = digest(seed, indices, tag);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn digest(seed: u64, indices: &[u64], tag: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(STREAM_VERSION.to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update((indices.len() as u64).to_le_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    h.update(tag.as_bytes());
    h.finalize().into()
}
