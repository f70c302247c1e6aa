//! Seeded fixtures shared by the benchmarks.

use outlierkit_core::mc::replicate_rng;
use outlierkit_core::Family;

/// `n` draws from the standardized `family`.
pub fn sample(family: Family, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = replicate_rng(seed, 0);
    (0..n).map(|_| family.sample(&mut rng)).collect()
}

/// A normal sample whose first `r` values are pushed far into the right tail.
pub fn contaminated(n: usize, r: usize, seed: u64) -> Vec<f64> {
    let mut x = sample(Family::Normal, n, seed);
    for (i, v) in x.iter_mut().take(r).enumerate() {
        *v = 8.0 + i as f64;
    }
    x
}
