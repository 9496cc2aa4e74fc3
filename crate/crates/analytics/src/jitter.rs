//! Vertical jitter keyed by capture id, so a point keeps its offset whatever
//! else is in the plot.

use protobooth_core::CaptureId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const JITTER_BOUND: f64 = 0.4;

/// Uniform in `[-0.4, 0.4]`, a pure function of `(seed, capture_id)`.
pub fn jitter(seed: u64, capture_id: &CaptureId) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(capture_id.as_str().as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key).random_range(-JITTER_BOUND..=JITTER_BOUND)
}
