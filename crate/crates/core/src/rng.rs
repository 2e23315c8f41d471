//! Seeded randomness. A run owns one 64-bit seed; every consumer draws from its
//! own ChaCha stream of that seed, so adding draws in one place never shifts
//! the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Graph = 1,
    TeacherInit = 2,
    TeacherCoupling = 3,
    LearnerGraph = 4,
    LearnerCoupling = 5,
    LearnerInit = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Teacher couplings are drawn from this range.
pub const ALPHA_RANGE: (f64, f64) = (0.1, 0.9);
/// Initial learner couplings; deliberately straddles 1 so learners may start non-WLC.
pub const GAMMA0_RANGE: (f64, f64) = (0.1, 2.5);
/// Initial neural states.
pub const X0_RANGE: (f64, f64) = (0.05, 0.95);

/// `n` independent draws from `U(lo, hi)`.
pub fn uniform_vec<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}
