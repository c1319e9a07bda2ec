//! Counter-based random streams. Every run seed fans out into independent
//! ChaCha streams so that, for example, the learner's sampling draws never
//! depend on how many draws the adversary consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Learner = 0,
    Adversary = 1,
    Environment = 2,
    Instance = 3,
}

pub fn stream(seed: u64, sub: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sub as u64);
    rng
}
