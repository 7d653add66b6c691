//! Counter-based random streams. A stream is fully determined by
//! `(master seed, stream id)`; ChaCha's 64-bit stream parameter gives
//! non-overlapping sequences for distinct ids, so results do not depend on
//! which worker draws them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}
