//! Bolshev's test on Thompson-distribution tail probabilities.

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::estimators::{mean_sd_fit, order_asc, z_scores};
use crate::mc;
use crate::report::{Detector, Details, Method, OutlierReport};
use crate::special::{student_t_cdf, student_t_sf};

use super::{check_alpha, check_s, split_by_side};

/// CDF of Thompson's distribution with `nu` degrees of freedom, the law of
/// `τ = t sqrt((ν+1)/(ν+t²))` for Student `t` with `ν` degrees of freedom.
/// Supported on `|τ| < sqrt(ν+1)`.
pub fn thompson_cdf(nu: f64, tau: f64) -> f64 {
    match thompson_to_t(nu, tau) {
        Ok(t) => student_t_cdf(nu, t),
        Err(above) => {
            if above {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `1 - thompson_cdf(nu, tau)` without cancellation in the upper tail.
pub fn thompson_sf(nu: f64, tau: f64) -> f64 {
    match thompson_to_t(nu, tau) {
        Ok(t) => student_t_sf(nu, t),
        Err(above) => {
            if above {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// `Err(true)` above the support, `Err(false)` below it.
fn thompson_to_t(nu: f64, tau: f64) -> Result<f64, bool> {
    let edge = nu + 1.0 - tau * tau;
    if edge <= 0.0 {
        return Err(tau > 0.0);
    }
    Ok(tau * (nu / edge).sqrt())
}

/// Studentized residual `(X_i - X̄)/S` on Thompson's scale for sample size `n`.
pub fn thompson_scale(n: usize) -> f64 {
    (n as f64 / (n as f64 - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BolshevStat {
    /// `τ_i = n (1 - T_{n-2}(·))` in input order.
    pub tau_values: Vec<f64>,
    /// `min_{i ≤ s} τ_(i) / i`.
    pub tau_min_ratio: f64,
    pub critical: f64,
    pub s: usize,
    pub side: Side,
}

/// `τ` values for the searched side: `Ŷ` for right, `-Ŷ` for left and
/// `|Ŷ|` for two-sided, with mean/sd z-scores.
pub fn bolshev_taus(z: &[f64], side: Side) -> Vec<f64> {
    let n = z.len();
    let nu = n as f64 - 2.0;
    let c = thompson_scale(n);
    super::oriented(z, side).into_iter().map(|y| n as f64 * thompson_sf(nu, y * c)).collect()
}

fn min_ratio(sorted_idx: &[usize], taus: &[f64], s: usize) -> f64 {
    (1..=s).map(|i| taus[sorted_idx[i - 1]] / i as f64).fold(f64::INFINITY, f64::min)
}

/// Null draws of `min_{i ≤ s} τ_(i)/i`.
pub fn simulate_null(family: Family, n: usize, s: usize, side: Side, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    check_s(n, s)?;
    if n < 3 {
        return Err(Error::Config("Bolshev needs n >= 3".into()));
    }
    mc::replicates(replicates, seed, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| family.sample(rng)).collect();
        let fit = mean_sd_fit(&x)?;
        let taus = bolshev_taus(&z_scores(&x, &fit), side);
        Ok(min_ratio(&order_asc(&taus), &taus, s))
    })
    .into_iter()
    .collect()
}

/// Lower `α` quantile of the null minimum ratio.
pub fn simulate_critical(
    family: Family,
    n: usize,
    s: usize,
    alpha: f64,
    side: Side,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let mut v = simulate_null(family, n, s, side, replicates, seed)?;
    Ok(mc::empirical_quantile(&mut v, alpha))
}

/// Rejects when the minimum ratio falls below `critical`; the observation
/// behind `τ_(i)` is declared whenever `τ_(i)/i < critical`.
pub fn bolshev_classify(x: &[f64], s: usize, side: Side, critical: f64) -> Result<OutlierReport> {
    let n = x.len();
    check_s(n, s)?;
    if !critical.is_finite() {
        return Err(Error::MissingCritical(format!("bolshev n={n} s={s}")));
    }
    let fit = mean_sd_fit(x)?;
    let z = z_scores(x, &fit);
    let taus = bolshev_taus(&z, side);
    let order = order_asc(&taus);
    let ratio = min_ratio(&order, &taus, s);
    let declared: Vec<usize> =
        (1..=s).filter(|&i| taus[order[i - 1]] / (i as f64) < critical).map(|i| order[i - 1]).collect();
    let (right, left) = split_by_side(declared, &z, side);
    let stat = BolshevStat { tau_values: taus, tau_min_ratio: ratio, critical, s, side };
    Ok(OutlierReport::new(Method::Bolshev, n, right, left, fit, Details::Bolshev(stat)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BolshevDetector {
    pub s: usize,
    pub side: Side,
    pub critical: f64,
}

impl Detector for BolshevDetector {
    fn method(&self) -> Method {
        Method::Bolshev
    }

    fn classify(&self, x: &[f64]) -> Result<OutlierReport> {
        bolshev_classify(x, self.s, self.side, self.critical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thompson_basic_values() {
        for nu in [1.0, 5.0, 18.0] {
            assert!((thompson_cdf(nu, 0.0) - 0.5).abs() < 1e-12);
            let edge = (nu + 1.0f64).sqrt();
            assert_eq!(thompson_cdf(nu, edge), 1.0);
            assert!(thompson_cdf(nu, edge * (1.0 - 1e-9)) > 0.999);
            assert_eq!(thompson_cdf(nu, -edge - 1.0), 0.0);
        }
    }

    #[test]
    fn thompson_is_monotone() {
        let mut prev = 0.0;
        for k in -40..=40 {
            let c = thompson_cdf(10.0, k as f64 * 0.08);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn taus_lie_in_zero_n() {
        let z = [2.5, -1.0, 0.3, 0.0, -3.9];
        for side in [Side::Right, Side::Left, Side::TwoSided] {
            assert!(bolshev_taus(&z, side).iter().all(|&t| (0.0..=5.0).contains(&t)));
        }
    }
}
