//! Small hand-built obstacle layouts shared by tests, the acceptance suite and
//! the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Obstacle, Vec2};

/// Five rocks forming a cup that opens toward the origin, with its bottom on
/// the segment from `(0, 0)` to `(6, 0)`. Gaps between neighbours are
/// narrower than the rover.
pub fn u_trap_obstacles() -> Vec<Obstacle> {
    vec![
        Obstacle::rock(3.5, 0.0, 0.35),
        Obstacle::rock(3.3, 0.8, 0.35),
        Obstacle::rock(3.3, -0.8, 0.35),
        Obstacle::rock(2.7, 1.2, 0.35),
        Obstacle::rock(2.7, -1.2, 0.35),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapCase {
    pub start: Vec2,
    pub target: Vec2,
    pub obstacles: Vec<Obstacle>,
}

/// A seeded variant of the cup: rock centers jittered by up to 3 cm, start
/// and target shifted laterally by up to 0.3 m.
pub fn u_trap_case(seed: u64) -> TrapCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |s: f64| rng.random_range(-s..s);
    let obstacles = u_trap_obstacles()
        .into_iter()
        .map(|o| Obstacle::new(o.center + Vec2::new(jitter(0.03), jitter(0.03)), o.radius, o.kind))
        .collect();
    TrapCase {
        start: Vec2::new(0.0, jitter(0.3)),
        target: Vec2::new(6.0, jitter(0.3)),
        obstacles,
    }
}

