//! Simulated null critical values for the Bolshev and Hawkins statistics.

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::report::Method;

use super::{bolshev, hawkins};

/// Bolshev: lower `α` quantile of the minimum `τ` ratio.
/// Hawkins: upper `α` quantile of `max_k b_k`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_baseline_critical(
    method: Method,
    family: Family,
    n: usize,
    s: usize,
    alpha: f64,
    side: Side,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    match method {
        Method::Bolshev => bolshev::simulate_critical(family, n, s, alpha, side, replicates, seed),
        Method::Hawkins => hawkins::simulate_critical(family, n, s, alpha, side, replicates, seed),
        other => Err(Error::Config(format!("{other} has no single baseline critical value"))),
    }
}
