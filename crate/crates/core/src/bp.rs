//! The BP stepwise procedure.
//!
//! Extreme z-scores `Ŷ` of a robustly standardized sample are normalized
//! with the constants `b_m`, `a_m` of the baseline family and mapped through
//! `U_i = 1 - F_{χ²(2i)}(2 e^{-(Ŷ - b_m)/a_m})` (or `2 / (1 + (Ŷ - b_m)/a_m)`
//! in the Fréchet class). Under the null hypothesis every `U_i` is
//! asymptotically uniform, so `max_{i ≤ s} U_i` is compared with the
//! simulated critical value `v_α(s)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, GammaClass, Side};
use crate::error::{Error, Result};
use crate::estimators::{order_desc, robust_fit, z_scores};
use crate::mc;
use crate::report::{Detector, Details, Method, OutlierReport};
use crate::special::chi2_even_sf;

pub const DEFAULT_S: usize = 5;

/// Replicates used when an asymptotic critical value is not tabulated.
pub const V_REPLICATES: usize = 1_000_000;
pub const V_SEED: u64 = 0x5eed_0b9e;

/// Published `v_α(5)` for α = 0.1, 0.05, 0.01.
pub fn tabulated_v(s: usize, alpha: f64) -> Option<f64> {
    if s != 5 {
        return None;
    }
    [(0.1, 0.9677), (0.05, 0.9853), (0.01, 0.9975)]
        .iter()
        .find(|(a, _)| *a == alpha)
        .map(|&(_, v)| v)
}

/// `v_α(s)`: the tabulated value when available, otherwise a simulation
/// with [`V_REPLICATES`] replicates, memoized for the process lifetime.
pub fn asymptotic_critical_value(s: usize, alpha: f64) -> f64 {
    if let Some(v) = tabulated_v(s, alpha) {
        return v;
    }
    static MEMO: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    let key = (s, alpha.to_bits());
    if let Some(&v) = memo.lock().unwrap().get(&key) {
        return v;
    }
    let v = simulate_critical_value_v(s, alpha, V_REPLICATES, V_SEED);
    memo.lock().unwrap().insert(key, v);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    pub family: Family,
    pub alpha: f64,
    pub side: Side,
    pub s: usize,
    /// Threshold for each `U` value, already at the per-side level.
    pub critical_value: f64,
    pub use_exact_critical: bool,
}

impl BpConfig {
    /// Configuration with `s = 5` and the asymptotic critical value.
    pub fn new(family: Family, side: Side, alpha: f64) -> Result<Self> {
        Self::with_s(family, side, alpha, DEFAULT_S)
    }

    pub fn with_s(family: Family, side: Side, alpha: f64, s: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if s == 0 {
            return Err(Error::Config("s must be at least 1".into()));
        }
        let level = per_side_alpha(family, side, alpha);
        let cfg = BpConfig {
            family,
            alpha,
            side,
            s,
            critical_value: asymptotic_critical_value(s, level),
            use_exact_critical: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the critical value, e.g. by a simulated exact `u_α(n, s)`.
    pub fn with_critical(mut self, critical_value: f64, exact: bool) -> Result<Self> {
        self.critical_value = critical_value;
        self.use_exact_critical = exact;
        self.validate()?;
        Ok(self)
    }

    /// Level applied on each side: `α/2` for two-sided searches on a
    /// non-symmetric family, `α` otherwise.
    pub fn effective_alpha(&self) -> f64 {
        per_side_alpha(self.family, self.side, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.s == 0 {
            return Err(Error::Config("s must be at least 1".into()));
        }
        if !(self.critical_value > 0.0 && self.critical_value < 1.0) {
            return Err(Error::Config(format!("critical value {} outside (0, 1)", self.critical_value)));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} outside (0, 1)")))
    }
}

fn per_side_alpha(family: Family, side: Side, alpha: f64) -> f64 {
    if side == Side::TwoSided && !family.is_symmetric() {
        0.5 * alpha
    } else {
        alpha
    }
}

/// `U` for rank `i` as a function of the normalized extreme `x = (Ŷ - b)/a`.
///
/// In the Fréchet class the statistic is 0 when `1 + x <= 0`: the χ²
/// argument `2/(1+x)` tends to `+∞` as `1 + x` decreases to 0.
pub fn u_from_standardized(x: f64, i: usize, class: GammaClass) -> f64 {
    let arg = match class {
        GammaClass::Gumbel => 2.0 * (-x).exp(),
        GammaClass::Frechet => {
            let t = 1.0 + x;
            if t <= 0.0 {
                return 0.0;
            }
            2.0 / t
        }
    };
    chi2_even_sf(i, arg)
}

fn check_rank(len: usize, m: usize, i: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!("working sample size {m} below 2")));
    }
    if i == 0 || i > len || i > m {
        return Err(Error::Domain(format!("rank {i} outside 1..={}", len.min(m))));
    }
    Ok(())
}

/// `U⁺_{(m-i+1)}(m)` from z-scores sorted descending.
pub fn u_statistic_right(z_desc: &[f64], m: usize, i: usize, family: Family) -> Result<f64> {
    check_rank(z_desc.len(), m, i)?;
    let c = family.normalizing_constants(m)?;
    Ok(u_from_standardized((z_desc[i - 1] - c.b_n) / c.a_n, i, family.gamma_class()))
}

/// `U⁻_{(i)}(m)` from z-scores sorted ascending, using the starred constants.
pub fn u_statistic_left(z_asc: &[f64], m: usize, i: usize, family: Family) -> Result<f64> {
    check_rank(z_asc.len(), m, i)?;
    let c = family.normalizing_constants(m)?;
    Ok(u_from_standardized((-z_asc[i - 1] - c.b_star_n) / c.a_star_n, i, family.gamma_class()))
}

/// `U_{(m-i+1)}(m)` from absolute z-scores sorted descending, with the
/// constants at `2m`.
pub fn u_statistic_twosided_symmetric(abs_desc: &[f64], m: usize, i: usize, family: Family) -> Result<f64> {
    if !family.is_symmetric() {
        return Err(Error::Config(format!("two-sided symmetric statistic requested for non-symmetric family {family}")));
    }
    check_rank(abs_desc.len(), m, i)?;
    let c = family.normalizing_constants(2 * m)?;
    Ok(u_from_standardized((abs_desc[i - 1] - c.b_n) / c.a_n, i, family.gamma_class()))
}

/// Scores searched in descending order and how they are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    /// `Ŷ` with `(b_m, a_m)`.
    Upper,
    /// `-Ŷ` with `(b*_m, a*_m)`.
    Lower,
    /// `|Ŷ|` with `(b_2m, a_2m)`.
    Absolute,
}

impl Orientation {
    fn scores(self, z: &[f64]) -> Vec<f64> {
        match self {
            Orientation::Upper => z.to_vec(),
            Orientation::Lower => z.iter().map(|v| -v).collect(),
            Orientation::Absolute => z.iter().map(|v| v.abs()).collect(),
        }
    }

    fn constants(self, family: Family, m: usize) -> Result<(f64, f64)> {
        Ok(match self {
            Orientation::Upper => {
                let c = family.normalizing_constants(m)?;
                (c.b_n, c.a_n)
            }
            Orientation::Lower => {
                let c = family.normalizing_constants(m)?;
                (c.b_star_n, c.a_star_n)
            }
            Orientation::Absolute => {
                let c = family.normalizing_constants(2 * m)?;
                (c.b_n, c.a_n)
            }
        })
    }

    fn side(self) -> Side {
        match self {
            Orientation::Upper => Side::Right,
            Orientation::Lower => Side::Left,
            Orientation::Absolute => Side::TwoSided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpStepRecord {
    pub step_index: usize,
    pub sample_size_used: usize,
    /// `u_values[i-1]` is the statistic of the `i`-th remaining extreme.
    pub u_values: Vec<f64>,
    pub d_l: usize,
    /// Observation removed at this step when `d_l = s`.
    pub rejected_this_step: Option<usize>,
}

/// Stepwise search on one side (or on `|Ŷ|`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpTrail {
    pub side: Side,
    pub steps: Vec<BpStepRecord>,
    /// Number of extremes declared, `l - 1 + d_l`.
    pub declared: usize,
    /// Set when the search stopped after `⌊n/2⌋` consecutive rejections.
    pub truncated: bool,
}

impl BpTrail {
    /// `max_i U_i` at the first step.
    pub fn first_statistic(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.u_values.iter().copied().fold(0.0, f64::max))
    }
}

fn search(z: &[f64], orientation: Orientation, family: Family, s: usize, critical: f64) -> Result<(BpTrail, Vec<usize>)> {
    let n = z.len();
    let scores = orientation.scores(z);
    let order = order_desc(&scores);
    let class = family.gamma_class();
    let max_rejections = n / 2;
    let mut steps = Vec::new();
    let mut declared = 0;
    let mut truncated = false;
    for l in 1.. {
        let m = n - l + 1;
        let (b, a) = orientation.constants(family, m)?;
        let u_values: Vec<f64> = (1..=s)
            .map(|i| u_from_standardized((scores[order[l + i - 2]] - b) / a, i, class))
            .collect();
        let d_l = u_values.iter().rposition(|&u| u > critical).map_or(0, |p| p + 1);
        steps.push(BpStepRecord {
            step_index: l,
            sample_size_used: m,
            u_values,
            d_l,
            rejected_this_step: (d_l == s).then(|| order[l - 1]),
        });
        if d_l < s {
            declared = l - 1 + d_l;
            break;
        }
        if l >= max_rejections {
            declared = l;
            truncated = true;
            break;
        }
    }
    let trail = BpTrail { side: orientation.side(), steps, declared, truncated };
    Ok((trail, order[..declared].to_vec()))
}

/// Classifies `x` with the fit computed once on the full sample.
pub fn bp_classify(x: &[f64], config: &BpConfig) -> Result<OutlierReport> {
    config.validate()?;
    let n = x.len();
    if n < 2 {
        return Err(Error::Domain(format!("sample of size {n} is too small")));
    }
    if config.s > n / 2 {
        return Err(Error::Config(format!("s = {} exceeds n/2 = {}", config.s, n / 2)));
    }
    let family = config.family;
    let fit = robust_fit(x, family)?;
    let z = z_scores(x, &fit);
    let crit = config.critical_value;
    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut trails = Vec::new();
    match config.side {
        Side::Right => {
            let (t, idx) = search(&z, Orientation::Upper, family, config.s, crit)?;
            trails.push(t);
            right = idx;
        }
        Side::Left => {
            let (t, idx) = search(&z, Orientation::Lower, family, config.s, crit)?;
            trails.push(t);
            left = idx;
        }
        Side::TwoSided if family.is_symmetric() => {
            let (t, idx) = search(&z, Orientation::Absolute, family, config.s, crit)?;
            trails.push(t);
            for i in idx {
                if z[i] >= 0.0 {
                    right.push(i);
                } else {
                    left.push(i);
                }
            }
        }
        Side::TwoSided => {
            let (tr, r_idx) = search(&z, Orientation::Upper, family, config.s, crit)?;
            let (tl, l_idx) = search(&z, Orientation::Lower, family, config.s, crit)?;
            trails.push(tr);
            trails.push(tl);
            let in_right: std::collections::HashSet<usize> = r_idx.iter().copied().collect();
            let in_left: std::collections::HashSet<usize> = l_idx.iter().copied().collect();
            right = r_idx.into_iter().filter(|i| !in_left.contains(i) || z[*i] >= 0.0).collect();
            left = l_idx.into_iter().filter(|i| !in_right.contains(i) || z[*i] < 0.0).collect();
        }
    }
    Ok(OutlierReport::new(Method::Bp, n, right, left, fit, Details::Bp { config: *config, trails }))
}

/// Shape-scale data: classifies `ln x` with the log-scale family in `config`.
/// Indices refer to the original sample.
pub fn bp_classify_shape_scale(x: &[f64], config: &BpConfig) -> Result<OutlierReport> {
    let logs = log_transform(x)?;
    bp_classify(&logs, config)
}

pub(crate) fn log_transform(x: &[f64]) -> Result<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::NonPositive { index: i + 1, value: v })
            }
        })
        .collect()
}

/// `max_{i ≤ s} U_i` at the first step, for z-scores of a full sample.
/// Two-sided searches on non-symmetric families return `max(U⁺, U⁻)`.
pub fn step_one_statistic(z: &[f64], family: Family, side: Side, s: usize) -> Result<f64> {
    let n = z.len();
    let class = family.gamma_class();
    let top = |o: Orientation| -> Result<f64> {
        let mut scores = o.scores(z);
        scores.sort_unstable_by(|a, b| b.total_cmp(a));
        let (b, a) = o.constants(family, n)?;
        Ok((1..=s.min(n)).map(|i| u_from_standardized((scores[i - 1] - b) / a, i, class)).fold(0.0, f64::max))
    };
    match side {
        Side::Right => top(Orientation::Upper),
        Side::Left => top(Orientation::Lower),
        Side::TwoSided if family.is_symmetric() => top(Orientation::Absolute),
        Side::TwoSided => Ok(top(Orientation::Upper)?.max(top(Orientation::Lower)?)),
    }
}

/// Empirical `(1-α)` quantile of `V(s) = max_{i ≤ s} (1 - F_{χ²(2i)}(2(E_1 + … + E_i)))`
/// with i.i.d. standard exponential `E_j`.
pub fn simulate_critical_value_v(s: usize, alpha: f64, replicates: usize, seed: u64) -> f64 {
    let mut v = mc::replicates(replicates, seed, |rng, _| {
        let mut sum = 0.0;
        let mut best: f64 = 0.0;
        for i in 1..=s {
            let e: f64 = rng.sample(Exp1);
            sum += e;
            best = best.max(chi2_even_sf(i, 2.0 * sum));
        }
        best
    });
    mc::empirical_quantile(&mut v, 1.0 - alpha)
}

/// Empirical `(1-α)` quantile of the first-step statistic `U(n, s)` on
/// samples of size `n` from the standardized family.
pub fn simulate_exact_critical_value_u(
    family: Family,
    n: usize,
    s: usize,
    alpha: f64,
    side: Side,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    simulate_exact_critical_value_u_with_params(family, n, s, alpha, side, replicates, seed, 0.0, 1.0)
}

/// As [`simulate_exact_critical_value_u`], drawing from `μ + σ F0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_exact_critical_value_u_with_params(
    family: Family,
    n: usize,
    s: usize,
    alpha: f64,
    side: Side,
    replicates: usize,
    seed: u64,
    mu: f64,
    sigma: f64,
) -> Result<f64> {
    let mut v = simulate_u_null(family, n, s, side, replicates, seed, mu, sigma)?;
    Ok(mc::empirical_quantile(&mut v, 1.0 - alpha))
}

/// Null draws of `U(n, s)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_u_null(
    family: Family,
    n: usize,
    s: usize,
    side: Side,
    replicates: usize,
    seed: u64,
    mu: f64,
    sigma: f64,
) -> Result<Vec<f64>> {
    if n < 2 || s == 0 || s > n {
        return Err(Error::Config(format!("invalid sizes n = {n}, s = {s}")));
    }
    mc::replicates(replicates, seed, |rng, _| {
        let x: Vec<f64> = (0..n).map(|_| mu + sigma * family.sample(rng)).collect();
        let fit = robust_fit(&x, family)?;
        step_one_statistic(&z_scores(&x, &fit), family, side, s)
    })
    .into_iter()
    .collect()
}

/// BP classifier with a fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BpDetector {
    pub config: BpConfig,
    pub shape_scale: bool,
}

impl BpDetector {
    pub fn new(config: BpConfig) -> Self {
        BpDetector { config, shape_scale: false }
    }
}

impl Detector for BpDetector {
    fn method(&self) -> Method {
        Method::Bp
    }

    fn classify(&self, x: &[f64]) -> Result<OutlierReport> {
        if self.shape_scale {
            bp_classify_shape_scale(x, &self.config)
        } else {
            bp_classify(x, &self.config)
        }
    }
}
