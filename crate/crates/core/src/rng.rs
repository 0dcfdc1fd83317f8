//! Seeded counter-based random streams.
//!
//! Every trajectory draws from its own ChaCha stream, addressed by
//! `(seed, trajectory, purpose)`, so ensemble results do not depend on how
//! trajectories are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Modes = 0,
    Phase = 1,
    Technical = 2,
    Detection = 3,
    LoPhase = 4,
    Servo = 5,
}

const PURPOSES: u64 = 8;

/// Substream for one trajectory and purpose.
pub fn substream(seed: u64, trajectory: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

#[inline]
pub fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
