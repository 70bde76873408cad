#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_mather::FourierPotential;

pub const ORBITS: [(i64, i64); 3] = [(3, 2), (7, 5), (17, 12)];

/// Seeded random trigonometric polynomials with modes `|m|, |n| ≤ 3`.
pub fn corpus(seed: u64, count: usize) -> Vec<FourierPotential> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| FourierPotential::random(&mut rng, 3, 1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
