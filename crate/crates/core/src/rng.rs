//! Seeded randomness.
//!
//! A run owns one seed. Each consumer draws from its own ChaCha stream keyed
//! by a purpose tag, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Tree,
    Layout,
    Dataset,
    Split,
    Init,
    Reseed,
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Tree => 1,
            Purpose::Layout => 2,
            Purpose::Dataset => 3,
            Purpose::Split => 4,
            Purpose::Init => 5,
            Purpose::Reseed => 6,
        }
    }
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream_id());
    rng
}
