//! Rosner's sequential (generalized ESD) procedure.

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::estimators::{mean_sd, mean_sd_fit, order_asc};
use crate::mc;
use crate::report::{Detector, Details, Method, OutlierReport};
use crate::special::student_t_upper;

use super::check_alpha;

/// Sample sizes above this use the Student-t approximation of `λ`.
pub const APPROXIMATION_MIN_N: usize = 26;

/// `⌊0.4 n⌋`, the recommended upper limit on the number of outliers.
pub fn default_s(n: usize) -> usize {
    2 * n / 5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosnerConfig {
    pub n: usize,
    pub s: usize,
    pub alpha: f64,
    pub side: Side,
    pub lambdas: Vec<f64>,
    /// Whether `lambdas` were simulated rather than approximated.
    pub simulated: bool,
}

impl RosnerConfig {
    pub fn approximate(n: usize, s: usize, alpha: f64, side: Side) -> Result<Self> {
        Ok(RosnerConfig { n, s, alpha, side, lambdas: rosner_lambdas(n, s, alpha, side)?, simulated: false })
    }

    pub fn simulated(n: usize, s: usize, alpha: f64, side: Side, replicates: usize, seed: u64) -> Result<Self> {
        let lambdas = rosner_lambdas_simulated(n, s, alpha, side, replicates, seed)?;
        Ok(RosnerConfig { n, s, alpha, side, lambdas, simulated: true })
    }

    /// Approximation for `n > 25`, simulation below.
    pub fn auto(n: usize, s: usize, alpha: f64, side: Side, replicates: usize, seed: u64) -> Result<Self> {
        if n >= APPROXIMATION_MIN_N {
            Self::approximate(n, s, alpha, side)
        } else {
            Self::simulated(n, s, alpha, side, replicates, seed)
        }
    }
}

fn check_sizes(n: usize, s: usize) -> Result<()> {
    if s == 0 || s + 2 >= n {
        return Err(Error::Config(format!("Rosner needs 1 <= s < n - 2 (n = {n}, s = {s})")));
    }
    Ok(())
}

/// Approximate critical values
/// `λ_i = t · sqrt((n-i)/(n-i-1+t²)) · sqrt(1 - 1/(n-i+1))`, where `t` is the
/// upper `p` point of Student's t with `n-i+1` degrees of freedom and
/// `p = α/(2(n-i-1))` two-sided or `α/(n-i-1)` one-sided.
pub fn rosner_lambdas(n: usize, s: usize, alpha: f64, side: Side) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_sizes(n, s)?;
    Ok((1..=s)
        .map(|i| {
            let k = (n - i) as f64;
            let p = match side {
                Side::TwoSided => alpha / (2.0 * (k - 1.0)),
                Side::Right | Side::Left => alpha / (k - 1.0),
            };
            let t = student_t_upper(k + 1.0, p);
            t * (k / (k - 1.0 + t * t)).sqrt() * (1.0 - 1.0 / (k + 1.0)).sqrt()
        })
        .collect())
}

/// Peeling statistics `R_1..R_s`, the removed indices, and whether each
/// removal came from the upper end.
#[derive(Debug, Clone, PartialEq)]
pub struct Peeling {
    pub r_values: Vec<f64>,
    pub removed: Vec<usize>,
    pub upper: Vec<bool>,
}

/// Removes the observation farthest from the current mean `s` times,
/// refitting mean and standard deviation each time. Among equal candidates
/// the lower original index goes first.
pub fn rosner_statistics(x: &[f64], s: usize, side: Side) -> Result<Peeling> {
    let n = x.len();
    check_sizes(n, s)?;
    let mut pos = order_asc(x);
    let (mut lo, mut hi) = (0usize, n - 1);
    let mut out = Peeling { r_values: Vec::with_capacity(s), removed: Vec::new(), upper: Vec::new() };
    let mut buf = Vec::with_capacity(n);
    for _ in 0..s {
        buf.clear();
        buf.extend(pos[lo..=hi].iter().map(|&p| x[p]));
        let (mean, sd) = mean_sd(&buf);
        if !(sd > 0.0) {
            break;
        }
        // lowest original index within the tied runs at each end
        let top_val = x[pos[hi]];
        let mut j = hi;
        let mut best = hi;
        while j > lo && x[pos[j - 1]] == top_val {
            j -= 1;
            if pos[j] < pos[best] {
                best = j;
            }
        }
        pos.swap(best, hi);
        let bot_val = x[pos[lo]];
        let mut j = lo;
        let mut best = lo;
        while j < hi && x[pos[j + 1]] == bot_val {
            j += 1;
            if pos[j] < pos[best] {
                best = j;
            }
        }
        pos.swap(best, lo);

        let dev_hi = x[pos[hi]] - mean;
        let dev_lo = mean - x[pos[lo]];
        let take_upper = match side {
            Side::Right => true,
            Side::Left => false,
            Side::TwoSided => dev_hi > dev_lo || (dev_hi == dev_lo && pos[hi] < pos[lo]),
        };
        if take_upper {
            out.r_values.push(dev_hi / sd);
            out.removed.push(pos[hi]);
            hi -= 1;
        } else {
            out.r_values.push(dev_lo / sd);
            out.removed.push(pos[lo]);
            lo += 1;
        }
        out.upper.push(take_upper);
    }
    out.r_values.resize(s, 0.0);
    Ok(out)
}

/// Number of outliers: the largest `i` with `R_i > λ_i`.
fn outlier_count(r: &[f64], lambdas: &[f64]) -> usize {
    r.iter().zip(lambdas).rposition(|(r, l)| r > l).map_or(0, |p| p + 1)
}

/// Critical values from null simulation: a common marginal level `γ` is
/// found by bisection so that `P(∪ {R_i > λ_i}) = α` with
/// `λ_i` the upper `γ` quantile of `R_i`.
pub fn rosner_lambdas_simulated(
    n: usize,
    s: usize,
    alpha: f64,
    side: Side,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_sizes(n, s)?;
    let draws: Vec<Vec<f64>> = mc::replicates(replicates, seed, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| Family::Normal.sample(rng)).collect();
        rosner_statistics(&x, s, side).map(|p| p.r_values)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut columns: Vec<Vec<f64>> = (0..s).map(|i| draws.iter().map(|d| d[i]).collect()).collect();
    for c in &mut columns {
        c.sort_unstable_by(f64::total_cmp);
    }
    let lambdas_at = |g: f64| -> Vec<f64> { columns.iter().map(|c| mc::quantile_of_sorted(c, 1.0 - g)).collect() };
    let rejection = |l: &[f64]| -> f64 {
        draws.iter().filter(|d| d.iter().zip(l).any(|(r, l)| r > l)).count() as f64 / draws.len() as f64
    };
    let (mut lo, mut hi) = (0.0, alpha);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if rejection(&lambdas_at(mid)) <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lambdas_at(lo))
}

pub fn rosner_classify(x: &[f64], config: &RosnerConfig) -> Result<OutlierReport> {
    if x.len() != config.n {
        return Err(Error::SizeMismatch { expected: config.n, actual: x.len() });
    }
    if config.lambdas.len() != config.s {
        return Err(Error::Config(format!("{} critical values for s = {}", config.lambdas.len(), config.s)));
    }
    let fit = mean_sd_fit(x)?;
    let p = rosner_statistics(x, config.s, config.side)?;
    let k = outlier_count(&p.r_values, &config.lambdas);
    let (mut right, mut left) = (Vec::new(), Vec::new());
    for j in 0..k {
        if p.upper[j] {
            right.push(p.removed[j]);
        } else {
            left.push(p.removed[j]);
        }
    }
    let details = Details::Rosner { r_values: p.r_values, lambdas: config.lambdas.clone(), removed: p.removed };
    Ok(OutlierReport::new(Method::Rosner, x.len(), right, left, fit, details))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosnerDetector {
    pub config: RosnerConfig,
}

impl Detector for RosnerDetector {
    fn method(&self) -> Method {
        Method::Rosner
    }

    fn classify(&self, x: &[f64]) -> Result<OutlierReport> {
        rosner_classify(x, &self.config)
    }
}
