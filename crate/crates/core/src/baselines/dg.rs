//! Davies-Gather outlier regions generalized to location-scale families.
//!
//! An observation is an outlier when its z-score crosses a threshold
//! chosen by simulation so that a clean sample has no crossing with
//! probability `1 - α`.

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::estimators::{fit, z_scores, EstimatorKind};
use crate::mc;
use crate::report::{Detector, Details, Method, OutlierReport};

use super::check_alpha;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgThresholds {
    pub family: Family,
    pub n: usize,
    pub alpha: f64,
    pub estimator: EstimatorKind,
    pub side: Side,
    /// Upper critical value of `Ŷ_(n)` at the per-side level.
    pub g_n_alpha: f64,
    /// Lower critical value of `Ŷ_(1)` at the per-side level.
    pub h_n_1_alpha: f64,
    /// Upper `α` critical value of `|Ŷ|_(n)`.
    pub g_sym: f64,
}

impl DgThresholds {
    /// Level used for `g` and `h`: `α/2` for two-sided, `α` otherwise.
    pub fn per_side_alpha(&self) -> f64 {
        per_side(self.side, self.alpha)
    }
}

fn per_side(side: Side, alpha: f64) -> f64 {
    if side == Side::TwoSided {
        0.5 * alpha
    } else {
        alpha
    }
}

/// Null draws of `(Ŷ_(n), Ŷ_(1), |Ŷ|_(n))`.
pub fn simulate_extremes(
    family: Family,
    n: usize,
    estimator: EstimatorKind,
    replicates: usize,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    if n < 3 {
        return Err(Error::Config(format!("Davies-Gather thresholds need n >= 3, got {n}")));
    }
    mc::replicates(replicates, seed, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| family.sample(rng)).collect();
        let f = fit(&x, family, estimator)?;
        let z = z_scores(&x, &f);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &z {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((hi, lo, hi.max(-lo)))
    })
    .into_iter()
    .collect()
}

pub fn dg_thresholds(
    family: Family,
    n: usize,
    alpha: f64,
    estimator: EstimatorKind,
    side: Side,
    replicates: usize,
    seed: u64,
) -> Result<DgThresholds> {
    check_alpha(alpha)?;
    let draws = simulate_extremes(family, n, estimator, replicates, seed)?;
    let a = per_side(side, alpha);
    let mut hi: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut lo: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let mut ab: Vec<f64> = draws.iter().map(|d| d.2).collect();
    Ok(DgThresholds {
        family,
        n,
        alpha,
        estimator,
        side,
        g_n_alpha: mc::empirical_quantile(&mut hi, 1.0 - a),
        h_n_1_alpha: mc::empirical_quantile(&mut lo, a),
        g_sym: mc::empirical_quantile(&mut ab, 1.0 - alpha),
    })
}

pub fn dg_classify(x: &[f64], th: &DgThresholds) -> Result<OutlierReport> {
    if x.len() != th.n {
        return Err(Error::SizeMismatch { expected: th.n, actual: x.len() });
    }
    let f = fit(x, th.family, th.estimator)?;
    let z = z_scores(x, &f);
    let (upper, lower) = match th.side {
        Side::Right => (th.g_n_alpha, f64::NEG_INFINITY),
        Side::Left => (f64::INFINITY, th.h_n_1_alpha),
        Side::TwoSided if th.family.is_symmetric() => (th.g_sym, -th.g_sym),
        Side::TwoSided => (th.g_n_alpha, th.h_n_1_alpha),
    };
    let right = (0..z.len()).filter(|&i| z[i] > upper).collect();
    let left = (0..z.len()).filter(|&i| z[i] < lower).collect();
    Ok(OutlierReport::new(Method::Dg, x.len(), right, left, f, Details::Dg { thresholds: *th }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgDetector {
    pub thresholds: DgThresholds,
}

impl Detector for DgDetector {
    fn method(&self) -> Method {
        Method::Dg
    }

    fn classify(&self, x: &[f64]) -> Result<OutlierReport> {
        dg_classify(x, &self.thresholds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_sample_below_threshold() {
        let th = DgThresholds {
            family: Family::Normal,
            n: 5,
            alpha: 0.05,
            estimator: EstimatorKind::MeanSd,
            side: Side::TwoSided,
            g_n_alpha: 3.0,
            h_n_1_alpha: -3.0,
            g_sym: 3.0,
        };
        let r = dg_classify(&[0.0, 1.0, 2.0, 3.0, 4.0], &th).unwrap();
        assert_eq!(r.count(), 0);
        assert!(matches!(dg_classify(&[0.0, 1.0], &th), Err(Error::SizeMismatch { expected: 5, actual: 2 })));
    }

    #[test]
    fn symmetric_thresholds_mirror() {
        let th = dg_thresholds(Family::Normal, 30, 0.05, EstimatorKind::MedQn, Side::TwoSided, 20_000, 11).unwrap();
        assert!((th.g_n_alpha + th.h_n_1_alpha).abs() < 0.1, "{th:?}");
        // max |Ŷ| exceeds g about as often as Ŷ_(n) or -Ŷ_(1) do
        assert!((th.g_sym - th.g_n_alpha).abs() < 0.15, "{th:?}");
    }
}
