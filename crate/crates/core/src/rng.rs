//! Counter-based random streams.
//!
//! A master seed expands into independent ChaCha8 streams keyed on
//! `(seed, domain, task)`. Work is always split into fixed-size chunks and each
//! chunk owns its stream, so results do not depend on how rayon schedules the
//! chunks, nor on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Subsystems that draw from a master seed. The discriminant occupies the top
/// byte of the ChaCha stream id, leaving 56 bits for the task counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Rde = 1,
    Beta = 2,
    Continuum = 3,
    Theorem1 = 4,
    Conductance = 5,
    LevelSet = 6,
    FixedSize = 7,
    Validation = 8,
    Misc = 9,
}

const TASK_MASK: u64 = (1 << 56) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn stream(self, domain: Domain, task: u64) -> StreamRng {
        debug_assert!(task <= TASK_MASK, "task id {task} overflows 56 bits");
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(((domain as u64) << 56) | (task & TASK_MASK));
        rng
    }

    /// A child seed, for handing a whole sub-experiment its own key space.
    pub fn derive(self, label: u64) -> Seed {
        // splitmix64 finalizer
        let mut z = self.0 ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

/// Task id for chunk `chunk` of pass `pass` (an iteration, a ladder rung...).
pub fn task_id(pass: u64, chunk: u64) -> u64 {
    debug_assert!(chunk < 1 << 32);
    (pass << 32) | chunk
}
