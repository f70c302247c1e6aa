//! Baseline location-scale families, their extreme-value normalizing
//! constants, Qn consistency constants and outlier regions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// Standardized baseline distribution `F0` of a location-scale family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Normal,
    /// Minimum-type: `F0(x) = 1 - exp(-e^x)`.
    ExtremeValueI,
    /// Maximum-type: `F0(x) = exp(-e^{-x})`.
    ExtremeValueII,
    Logistic,
    Laplace,
    Cauchy,
}

/// Max-domain of attraction of `F0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaClass {
    /// γ = 0
    Gumbel,
    /// γ > 0
    Frechet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
    TwoSided,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::TwoSided => "two",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            "two" | "two-sided" | "both" | "2" => Ok(Side::TwoSided),
            other => Err(Error::Config(format!("unknown side '{other}' (expected left, right or two)"))),
        }
    }
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Normal,
        Family::ExtremeValueI,
        Family::ExtremeValueII,
        Family::Logistic,
        Family::Laplace,
        Family::Cauchy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::ExtremeValueI => "ev1",
            Family::ExtremeValueII => "ev2",
            Family::Logistic => "logistic",
            Family::Laplace => "laplace",
            Family::Cauchy => "cauchy",
        }
    }

    pub fn gamma_class(self) -> GammaClass {
        match self {
            Family::Cauchy => GammaClass::Frechet,
            _ => GammaClass::Gumbel,
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, Family::Normal | Family::Logistic | Family::Laplace | Family::Cauchy)
    }

    /// Qn consistency constant `d = 1 / K0^{-1}(5/8)`, where `K0` is the
    /// CDF of `Y1 - Y2`. These are the published four-decimal values and
    /// are what the estimators use.
    pub fn qn_constant(self) -> f64 {
        match self {
            Family::Normal => 2.2219,
            Family::ExtremeValueI | Family::ExtremeValueII => 1.9576,
            Family::Logistic => 1.3079,
            Family::Laplace => 1.9306,
            Family::Cauchy => 1.2071,
        }
    }

    /// CDF `K0` of the difference of two independent standardized draws, `x >= 0`.
    pub fn pair_difference_cdf(self, x: f64) -> f64 {
        match self {
            Family::Normal => special::normal_cdf(x / 2f64.sqrt()),
            Family::ExtremeValueI | Family::ExtremeValueII => 1.0 / (1.0 + (-x).exp()),
            Family::Logistic => {
                if x.abs() < 1e-4 {
                    // series: 1/2 + x/6 + O(x^3)
                    0.5 + x / 6.0
                } else {
                    let em1 = x.exp_m1();
                    1.0 - ((x - 1.0) * x.exp() + 1.0) / (em1 * em1)
                }
            }
            Family::Laplace => 1.0 - 0.5 * (1.0 + 0.5 * x) * (-x).exp(),
            Family::Cauchy => 0.5 + (0.5 * x).atan() / PI,
        }
    }

    /// Recomputes `d` by bisection of `K0(x) = 5/8`.
    pub fn qn_constant_recomputed(self) -> f64 {
        let (mut lo, mut hi) = (1e-9, 20.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.pair_difference_cdf(mid) < 0.625 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 / (0.5 * (lo + hi))
    }

    /// Standardized CDF `F0(x)`.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Family::Normal => special::normal_cdf(x),
            Family::ExtremeValueI => -(-x.exp()).exp_m1(),
            Family::ExtremeValueII => (-(-x).exp()).exp(),
            Family::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Family::Laplace => {
                if x < 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            Family::Cauchy => {
                if x < -1.0 {
                    (-1.0 / x).atan() / PI
                } else {
                    0.5 + x.atan() / PI
                }
            }
        }
    }

    /// Survival function `1 - F0(x)`, accurate in the upper tail.
    pub fn sf(self, x: f64) -> f64 {
        match self {
            Family::Normal => special::normal_sf(x),
            Family::ExtremeValueI => (-x.exp()).exp(),
            Family::ExtremeValueII => -(-(-x).exp()).exp_m1(),
            Family::Logistic => self.cdf(-x),
            Family::Laplace => self.cdf(-x),
            Family::Cauchy => self.cdf(-x),
        }
    }

    /// Standardized density `f0(x)`.
    pub fn density(self, x: f64) -> f64 {
        match self {
            Family::Normal => special::normal_pdf(x),
            Family::ExtremeValueI => {
                let e = x.exp();
                if e.is_infinite() {
                    0.0
                } else {
                    e * (-e).exp()
                }
            }
            Family::ExtremeValueII => {
                let e = (-x).exp();
                if e.is_infinite() {
                    0.0
                } else {
                    e * (-e).exp()
                }
            }
            Family::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Family::Laplace => 0.5 * (-x.abs()).exp(),
            Family::Cauchy => 1.0 / (PI * (1.0 + x * x)),
        }
    }

    /// Standardized quantile `F0^{-1}(p)` for `0 < p < 1`.
    pub fn quantile(self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile probability {p} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(self, p: f64) -> f64 {
        match self {
            Family::Normal => special::normal_quantile(p),
            Family::ExtremeValueI => (-(-p).ln_1p()).ln(),
            Family::ExtremeValueII => -(-p.ln()).ln(),
            Family::Logistic => p.ln() - (-p).ln_1p(),
            Family::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
            Family::Cauchy => {
                if p == 0.5 {
                    0.0
                } else {
                    (PI * (p - 0.5)).tan()
                }
            }
        }
    }

    /// Upper quantile `F0^{-1}(1 - q)`, computed from `q` without forming `1 - q`.
    pub fn upper_quantile(self, q: f64) -> f64 {
        match self {
            Family::Normal => -special::normal_quantile(q),
            Family::ExtremeValueI => (-q.ln()).ln(),
            Family::ExtremeValueII => -(-(-q).ln_1p()).ln(),
            Family::Logistic | Family::Laplace | Family::Cauchy => -self.quantile_unchecked(q),
        }
    }

    /// Draws one standardized observation from `F0`.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Family::Normal => rng.sample(StandardNormal),
            _ => {
                let u: f64 = rng.sample(Open01);
                self.quantile_unchecked(u)
            }
        }
    }

    /// Normalizing constants for sample size `n`, using the closed forms
    /// where they exist. For the normal family `a_n = 1 / b_n`.
    pub fn normalizing_constants(self, n: usize) -> Result<NormalizingConstants> {
        if n < 2 {
            return Err(Error::Domain(format!("normalizing constants need n >= 2, got {n}")));
        }
        let nf = n as f64;
        let inv = 1.0 / nf;
        // -ln(1 - 1/n)
        let l = -(-inv).ln_1p();
        let (b_n, a_n, b_star_n, a_star_n) = match self {
            Family::Normal => {
                let b = -special::normal_quantile(inv);
                // 1/b_n is undefined at n = 2 where b_2 = 0
                let a = if n > 2 { 1.0 / b } else { 1.0 / (nf * special::normal_pdf(b)) };
                (b, a, b, a)
            }
            Family::ExtremeValueI => {
                let ln_n = nf.ln();
                (ln_n.ln(), 1.0 / ln_n, -l.ln(), 1.0 / ((nf - 1.0) * l))
            }
            Family::ExtremeValueII => {
                let ln_n = nf.ln();
                (-l.ln(), 1.0 / ((nf - 1.0) * l), ln_n.ln(), 1.0 / ln_n)
            }
            Family::Logistic => {
                let b = (nf - 1.0).ln();
                let a = nf / (nf - 1.0);
                (b, a, b, a)
            }
            Family::Laplace => {
                let b = (0.5 * nf).ln();
                (b, 1.0, b, 1.0)
            }
            Family::Cauchy => {
                let t = PI / nf;
                let s = t.sin();
                let b = t.cos() / s;
                let a = t / (s * s);
                (b, a, b, a)
            }
        };
        Ok(NormalizingConstants { n, b_n, a_n, b_star_n, a_star_n })
    }

    /// Normalizing constants from the generic definitions
    /// `b_n = F0^{-1}(1-1/n)`, `a_n = 1/(n f0(b_n))` and their starred mirrors.
    pub fn generic_normalizing_constants(self, n: usize) -> Result<NormalizingConstants> {
        if n < 2 {
            return Err(Error::Domain(format!("normalizing constants need n >= 2, got {n}")));
        }
        let nf = n as f64;
        let b_n = self.upper_quantile(1.0 / nf);
        let a_n = 1.0 / (nf * self.density(b_n));
        let b_star_n = -self.quantile_unchecked(1.0 / nf);
        let a_star_n = 1.0 / (nf * self.density(-b_star_n));
        Ok(NormalizingConstants { n, b_n, a_n, b_star_n, a_star_n })
    }

    /// `x f0(x) / sqrt(1 - F0(x))`, which must vanish as `x -> inf` for the
    /// extreme z-score limit theorems to hold.
    pub fn tail_condition_ratio(self, x: f64) -> f64 {
        x * self.density(x) / self.sf(x).sqrt()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "ev1" | "extreme-value-i" | "extreme-value-1" | "gumbel-min" => Ok(Family::ExtremeValueI),
            "ev2" | "extreme-value-ii" | "extreme-value-2" | "gumbel" => Ok(Family::ExtremeValueII),
            "logistic" => Ok(Family::Logistic),
            "laplace" => Ok(Family::Laplace),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(Error::Config(format!(
                "unknown family '{other}' (expected normal, ev1, ev2, logistic, laplace or cauchy)"
            ))),
        }
    }
}

/// Centering and scaling constants for the largest (`b_n`, `a_n`) and,
/// mirrored, the smallest (`b*_n`, `a*_n`) order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizingConstants {
    pub n: usize,
    pub b_n: f64,
    pub a_n: f64,
    pub b_star_n: f64,
    pub a_star_n: f64,
}

/// `α_n = 1 - (1 - ᾱ)^{1/n}`: the per-observation level at which a clean
/// sample of size `n` avoids the outlier region with probability `1 - ᾱ`.
pub fn alpha_n(n: usize, alpha_bar: f64) -> f64 {
    -((-alpha_bar).ln_1p() / n as f64).exp_m1()
}

/// CDF of chi-square with `2k` degrees of freedom,
/// `1 - e^{-x/2} Σ_{j<k} (x/2)^j / j!`.
pub fn chi2_even_cdf(k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("chi-square needs k >= 1".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-square argument {x} must be nonnegative")));
    }
    Ok(special::chi2_even_cdf(k, x))
}

/// Tail set of `F((x - μ)/σ)` carrying mass `α_n`.
///
/// For `Right` the region is `(lower, ∞)`, for `Left` it is `(-∞, upper)`;
/// for `TwoSided` it is the complement of `[lower, upper]`, each tail
/// carrying `α_n / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRegion {
    pub side: Side,
    pub alpha_n: f64,
    pub lower: f64,
    pub upper: f64,
}

impl OutlierRegion {
    pub fn contains(&self, x: f64) -> bool {
        match self.side {
            Side::Right => x > self.lower,
            Side::Left => x < self.upper,
            Side::TwoSided => x < self.lower || x > self.upper,
        }
    }
}

pub fn outlier_region(
    family: Family,
    mu: f64,
    sigma: f64,
    n: usize,
    alpha_bar: f64,
    side: Side,
) -> Result<OutlierRegion> {
    if n == 0 {
        return Err(Error::Domain("outlier region needs n >= 1".into()));
    }
    if !(alpha_bar > 0.0 && alpha_bar < 1.0) {
        return Err(Error::Domain(format!("overall level {alpha_bar} outside (0, 1)")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("scale {sigma} must be positive")));
    }
    let a = alpha_n(n, alpha_bar);
    let (lower, upper) = match side {
        Side::Right => (mu + sigma * family.upper_quantile(a), f64::INFINITY),
        Side::Left => (f64::NEG_INFINITY, mu + sigma * family.quantile_unchecked(a)),
        Side::TwoSided => (
            mu + sigma * family.quantile_unchecked(0.5 * a),
            mu + sigma * family.upper_quantile(0.5 * a),
        ),
    };
    Ok(OutlierRegion { side, alpha_n: a, lower, upper })
}
