//! Location and scale estimates: the median with the Qn scale estimator,
//! and the classical mean with sample standard deviation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// Median and Qn.
    #[serde(rename = "robust")]
    MedQn,
    /// Mean and standard deviation with the `n - 1` divisor.
    #[serde(rename = "ml")]
    MeanSd,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::MedQn => "robust",
            EstimatorKind::MeanSd => "ml",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "robust" | "medqn" | "rob" => Ok(EstimatorKind::MedQn),
            "ml" | "meansd" | "classical" => Ok(EstimatorKind::MeanSd),
            other => Err(Error::Config(format!("unknown estimator '{other}' (expected robust or ml)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustFit {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub method: EstimatorKind,
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("observation {} is not finite ({})", i + 1, x[i])));
    }
    Ok(())
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample median; the midpoint of the two central values for even `n`.
pub fn median(x: &[f64]) -> Result<f64> {
    check_finite(x)?;
    Ok(median_of_sorted(&sorted_copy(x)))
}

/// 1-based rank `k = C(h, 2)`, `h = ⌊n/2⌋ + 1`, of the pairwise difference
/// used by Qn.
pub fn qn_order_index(n: usize) -> usize {
    let h = n / 2 + 1;
    let pairs = n * n.saturating_sub(1) / 2;
    (h * (h - 1) / 2).clamp(1, pairs.max(1))
}

/// Number of pairs `i < j` with `v[j] - v[i] <= t` in a sorted slice.
fn count_pairs_within(v: &[f64], t: f64) -> usize {
    let mut count = 0;
    let mut i = 0;
    for j in 1..v.len() {
        while v[j] - v[i] > t {
            i += 1;
        }
        count += j - i;
    }
    count
}

/// The `k`-th smallest (1-based) of `v[j] - v[i]`, `i < j`, on sorted data.
///
/// Bisects over the bit patterns of non-negative doubles, which order the
/// same way as the values, so the result is one of the computed differences
/// exactly.
pub fn kth_pairwise_difference(sorted: &[f64], k: usize) -> f64 {
    debug_assert!(sorted.len() >= 2 && k >= 1);
    let span = sorted[sorted.len() - 1] - sorted[0];
    let (mut lo, mut hi) = (0u64, span.to_bits());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if count_pairs_within(sorted, f64::from_bits(mid)) >= k {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    f64::from_bits(lo)
}

fn qn_checks(x: &[f64]) -> Result<()> {
    check_finite(x)?;
    if x.len() < 2 {
        return Err(Error::Domain("Qn needs at least two observations".into()));
    }
    Ok(())
}

/// Qn scale estimate `d · W_(k)` over all pairwise absolute differences.
pub fn qn_scale(x: &[f64], family: Family) -> Result<f64> {
    qn_checks(x)?;
    let v = sorted_copy(x);
    qn_from_sorted(&v, family)
}

fn qn_from_sorted(v: &[f64], family: Family) -> Result<f64> {
    let w = kth_pairwise_difference(v, qn_order_index(v.len()));
    if w <= 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(family.qn_constant() * w)
}

/// Qn by enumerating and sorting all `n(n-1)/2` differences.
pub fn qn_scale_brute(x: &[f64], family: Family) -> Result<f64> {
    qn_checks(x)?;
    let mut w = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            w.push((x[i] - x[j]).abs());
        }
    }
    w.sort_unstable_by(f64::total_cmp);
    let v = w[qn_order_index(x.len()) - 1];
    if v <= 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(family.qn_constant() * v)
}

/// `μ̂ = MED - σ̂ F0^{-1}(1/2)`, `σ̂ = Qn`.
pub fn robust_fit(x: &[f64], family: Family) -> Result<RobustFit> {
    qn_checks(x)?;
    let v = sorted_copy(x);
    let sigma_hat = qn_from_sorted(&v, family)?;
    let med = median_of_sorted(&v);
    let mu_hat = if family.is_symmetric() {
        med
    } else {
        med - sigma_hat * family.quantile_unchecked(0.5)
    };
    Ok(RobustFit { mu_hat, sigma_hat, method: EstimatorKind::MedQn })
}

/// Arithmetic mean and sample standard deviation (two-pass).
pub fn mean_sd_fit(x: &[f64]) -> Result<RobustFit> {
    check_finite(x)?;
    if x.len() < 2 {
        return Err(Error::Domain("mean/sd fit needs at least two observations".into()));
    }
    let (mu_hat, sigma_hat) = mean_sd(x);
    if !(sigma_hat > 0.0) {
        return Err(Error::DegenerateScale);
    }
    Ok(RobustFit { mu_hat, sigma_hat, method: EstimatorKind::MeanSd })
}

pub(crate) fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn fit(x: &[f64], family: Family, kind: EstimatorKind) -> Result<RobustFit> {
    match kind {
        EstimatorKind::MedQn => robust_fit(x, family),
        EstimatorKind::MeanSd => mean_sd_fit(x),
    }
}

/// `Ŷ_i = (x_i - μ̂) / σ̂` in input order.
pub fn z_scores(x: &[f64], fit: &RobustFit) -> Vec<f64> {
    x.iter().map(|v| (v - fit.mu_hat) / fit.sigma_hat).collect()
}

/// Indices ordering `values` descending, ties by index ascending.
pub fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| match values[b].total_cmp(&values[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    idx
}

/// Indices ordering `values` ascending, ties by index ascending.
pub fn order_asc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]).unwrap(), 2.5);
        assert_eq!(median(&[]), Err(Error::EmptySample));
    }

    #[test]
    fn qn_single_pair() {
        for fam in Family::ALL {
            assert_eq!(qn_scale(&[0.0, 1.0], fam).unwrap(), fam.qn_constant());
        }
    }

    #[test]
    fn qn_index_values() {
        assert_eq!(qn_order_index(2), 1);
        assert_eq!(qn_order_index(4), 3);
        assert_eq!(qn_order_index(20), 55);
        assert_eq!(qn_order_index(21), 55);
    }

    #[test]
    fn qn_four_points() {
        // W sorted = [1, 2, 3, 4, 6, 7]; rank 3
        let q = qn_scale(&[1.0, 2.0, 4.0, 8.0], Family::Normal).unwrap();
        assert_eq!(q, 3.0 * 2.2219);
        assert_eq!(q, qn_scale_brute(&[1.0, 2.0, 4.0, 8.0], Family::Normal).unwrap());
    }

    #[test]
    fn qn_degenerate() {
        assert_eq!(qn_scale(&[2.0, 2.0, 2.0], Family::Normal), Err(Error::DegenerateScale));
        assert!(matches!(qn_scale(&[1.0], Family::Normal), Err(Error::Domain(_))));
    }

    #[test]
    fn mean_sd_examples() {
        let f = mean_sd_fit(&[0.0, 2.0]).unwrap();
        assert_eq!(f.mu_hat, 1.0);
        assert!((f.sigma_hat - 2f64.sqrt()).abs() < 1e-15);
        let g = mean_sd_fit(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.mu_hat, 3.0);
        assert!((g.sigma_hat - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd_fit(&[4.0, 4.0, 4.0]), Err(Error::DegenerateScale));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(robust_fit(&[1.0, f64::NAN, 2.0], Family::Normal), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_location_is_median() {
        let x = [3.0, -1.0, 7.5, 0.25, 2.0, 9.0];
        for fam in [Family::Normal, Family::Logistic, Family::Laplace, Family::Cauchy] {
            assert_eq!(robust_fit(&x, fam).unwrap().mu_hat, median(&x).unwrap());
        }
        let ev = robust_fit(&x, Family::ExtremeValueI).unwrap();
        assert!(ev.mu_hat != median(&x).unwrap());
    }

    #[test]
    fn z_scores_of_center_are_zero() {
        let fit = RobustFit { mu_hat: 1.5, sigma_hat: 2.0, method: EstimatorKind::MedQn };
        assert!(z_scores(&[1.5; 4], &fit).iter().all(|&z| z == 0.0));
    }

    #[test]
    fn orders_break_ties_by_index() {
        let v = [1.0, 3.0, 3.0, -2.0, 1.0];
        assert_eq!(order_desc(&v), vec![1, 2, 0, 4, 3]);
        assert_eq!(order_asc(&v), vec![3, 0, 4, 1, 2]);
    }
}
