//! Seedable, splittable random streams.
//!
//! A stream is fully described by `(seed, stream)`. Generation uses ChaCha8,
//! a counter-based cipher whose 64-bit stream id selects an independent
//! keystream, so a frozen particle system is reproducible from its
//! [`RngStream`] metadata alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The concrete generator handed to model samplers.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Deterministically derives a child stream labelled by `tag`.
    ///
    /// The child keeps the parent seed's key family but mixes the parent
    /// stream id and tag into a new key, so children of distinct parents
    /// never collide with each other or with the parent itself.
    pub fn derive(&self, tag: u64) -> RngStream {
        let key = splitmix64(splitmix64(self.seed ^ 0x5046_4d4c_0000_0000) ^ self.stream);
        RngStream {
            seed: splitmix64(key ^ tag.rotate_left(17)),
            stream: tag,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
