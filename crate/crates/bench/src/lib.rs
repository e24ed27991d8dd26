//! Shared fixtures for the benchmarks.

use locfin::Tower;

/// `[6, 10](2, 3, 5)`: mixed primes with a nontrivial prefix.
pub fn mixed_tower() -> Tower {
    Tower::from_ratios(&[6, 10], &[2, 3, 5]).expect("valid ratios")
}
