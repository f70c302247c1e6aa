//! Hawkins' test on scaled partial sums of the largest z-scores.

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::estimators::{mean_sd_fit, order_desc, z_scores};
use crate::mc;
use crate::report::{Detector, Details, Method, OutlierReport};

use super::{check_alpha, check_s, split_by_side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkinsStat {
    /// `b_k = Σ_{i ≤ k} Ỹ_(n-i+1) / sqrt(k (n-k))`, `k = 1..s`.
    pub b_values: Vec<f64>,
    pub b_max: f64,
    pub critical: f64,
    pub side: Side,
}

/// `b_1..b_s` from the `s` largest scores of a sample of size `n`, descending.
fn b_values(top: &[f64], n: usize, s: usize) -> Vec<f64> {
    let n = n as f64;
    let mut acc = 0.0;
    (1..=s)
        .map(|k| {
            acc += top[k - 1];
            let kf = k as f64;
            acc / (kf * (n - kf)).sqrt()
        })
        .collect()
}

fn statistic(z: &[f64], s: usize, side: Side) -> (Vec<usize>, Vec<f64>) {
    let scores = super::oriented(z, side);
    let order = order_desc(&scores);
    let top: Vec<f64> = order.iter().take(s).map(|&i| scores[i]).collect();
    let b = b_values(&top, z.len(), s);
    (order, b)
}

/// Null draws of `B = max_k b_k`.
pub fn simulate_null(family: Family, n: usize, s: usize, side: Side, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    check_s(n, s)?;
    mc::replicates(replicates, seed, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| family.sample(rng)).collect();
        let fit = mean_sd_fit(&x)?;
        let (_, b) = statistic(&z_scores(&x, &fit), s, side);
        Ok(b.into_iter().fold(f64::NEG_INFINITY, f64::max))
    })
    .into_iter()
    .collect()
}

/// Upper `α` quantile of the null `B`.
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
    Ok(mc::empirical_quantile(&mut v, 1.0 - alpha))
}

/// Rejects when `max_k b_k` exceeds `critical`; the `i`-th most extreme
/// observation is declared whenever `b_i > critical`.
pub fn hawkins_classify(x: &[f64], s: usize, side: Side, critical: f64) -> Result<OutlierReport> {
    let n = x.len();
    check_s(n, s)?;
    if !critical.is_finite() {
        return Err(Error::MissingCritical(format!("hawkins n={n} s={s}")));
    }
    let fit = mean_sd_fit(x)?;
    let z = z_scores(x, &fit);
    let (order, b) = statistic(&z, s, side);
    let declared: Vec<usize> = (1..=s).filter(|&i| b[i - 1] > critical).map(|i| order[i - 1]).collect();
    let (right, left) = split_by_side(declared, &z, side);
    let b_max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stat = HawkinsStat { b_values: b, b_max, critical, side };
    Ok(OutlierReport::new(Method::Hawkins, n, right, left, fit, Details::Hawkins(stat)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HawkinsDetector {
    pub s: usize,
    pub side: Side,
    pub critical: f64,
}

impl Detector for HawkinsDetector {
    fn method(&self) -> Method {
        Method::Hawkins
    }

    fn classify(&self, x: &[f64]) -> Result<OutlierReport> {
        hawkins_classify(x, self.s, self.side, self.critical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_values_by_hand() {
        // n = 4, top scores 2, 1
        let b = b_values(&[2.0, 1.0], 4, 2);
        assert!((b[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((b[1] - 3.0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn never_more_than_s() {
        let mut x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        x[0] = 50.0;
        x[1] = 51.0;
        let r = hawkins_classify(&x, 3, Side::Right, 0.1).unwrap();
        assert!(r.count() <= 3);
    }
}
