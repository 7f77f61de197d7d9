//! Shared fixtures for the benchmarks.

use longrange_core::rc::field::EdgeProbabilityField;
use longrange_core::seed::rng_from_seed;
use longrange_core::{PotentialSpec, Sign, SpinWindow};
use rand::Rng;

pub const ALPHA: f64 = 2.0;

pub fn ising(beta: f64) -> PotentialSpec {
    PotentialSpec::ising(ALPHA, beta).expect("valid parameters")
}

pub fn plus_window(n: usize) -> SpinWindow {
    SpinWindow::constant(n, Sign::Plus)
}

pub fn rho(beta: f64) -> EdgeProbabilityField {
    EdgeProbabilityField::rho(ALPHA, beta).expect("valid parameters")
}

/// `count` random vertex pairs on `n` vertices.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
}
