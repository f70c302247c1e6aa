//! Seeded Monte Carlo harness for masking and swamping studies.
//!
//! Each replicate holds `n - r` draws from the standardized baseline family
//! and `r` contaminants drawn inside the outlier region of level
//! `α_n = 1 - (1 - ᾱ)^{1/n}`. Replicate `i` of a run reads its own random
//! stream, so results are identical whatever the thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::baselines::{bolshev, dg, hawkins, rosner};
use crate::bp::{self, BpConfig, BpDetector};
use crate::cache::{CriticalKey, CriticalValueTable};
use crate::distributions::{outlier_region, Family, Side};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::mc;
use crate::report::{Detector, Method};
use crate::special::{normal_quantile, normal_sf};

/// Default overall level `ᾱ` of the outlier region that anchors contaminants.
pub const DEFAULT_ALPHA_BAR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Contaminant {
    /// Boundary plus an exponential excess with mean `theta`.
    TwoParamExponential { theta: f64 },
    /// `N(mu, rho²)` restricted to the outlier region. Left contaminants use
    /// the mirrored location `-mu`.
    TruncatedNormal { mu: f64, rho: f64 },
}

impl Contaminant {
    /// The swept parameter: `θ` or `μ`.
    pub fn param(&self) -> f64 {
        match *self {
            Contaminant::TwoParamExponential { theta } => theta,
            Contaminant::TruncatedNormal { mu, .. } => mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContaminationSide {
    Right,
    Left,
    /// Split as evenly as possible, the odd one on the right.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub kind: Contaminant,
    pub side: ContaminationSide,
    pub r: usize,
    pub alpha_bar: f64,
}

impl ContaminationSpec {
    pub fn new(kind: Contaminant, side: ContaminationSide, r: usize) -> Self {
        ContaminationSpec { kind, side, r, alpha_bar: DEFAULT_ALPHA_BAR }
    }

    /// Clean samples only.
    pub fn none() -> Self {
        Self::new(Contaminant::TwoParamExponential { theta: 1.0 }, ContaminationSide::Both, 0)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.r >= n {
            return Err(Error::Config(format!("r = {} contaminants leave no clean observation (n = {n})", self.r)));
        }
        if !(self.alpha_bar > 0.0 && self.alpha_bar < 1.0) {
            return Err(Error::Config(format!("alpha_bar {} outside (0, 1)", self.alpha_bar)));
        }
        match self.kind {
            Contaminant::TwoParamExponential { theta } if !(theta > 0.0) => {
                Err(Error::Config(format!("theta = {theta} must be positive")))
            }
            Contaminant::TruncatedNormal { rho, mu } if !(rho > 0.0) || !mu.is_finite() => {
                Err(Error::Config(format!("truncated normal needs finite mu and rho > 0 (mu = {mu}, rho = {rho})")))
            }
            _ => Ok(()),
        }
    }

    /// Number of contaminants on the (right, left).
    pub fn split(&self) -> (usize, usize) {
        match self.side {
            ContaminationSide::Right => (self.r, 0),
            ContaminationSide::Left => (0, self.r),
            ContaminationSide::Both => (self.r - self.r / 2, self.r / 2),
        }
    }

    /// Region boundaries `(x_lower, x_upper)` on the standardized scale,
    /// after checking that a truncated-normal location lies inside the
    /// region on every contaminated side.
    pub fn checked_anchors(&self, family: Family, n: usize) -> Result<(f64, f64)> {
        self.validate(n)?;
        let (lo, hi) = self.anchors(family, n)?;
        if let Contaminant::TruncatedNormal { mu, .. } = self.kind {
            let (r_right, r_left) = self.split();
            if (r_right > 0 && !(mu > hi)) || (r_left > 0 && !(-mu < lo)) {
                return Err(Error::Config(format!(
                    "truncated normal location {mu} must lie beyond the region boundary ({lo:.4}, {hi:.4})"
                )));
            }
        }
        Ok((lo, hi))
    }

    /// Region boundaries `(x_lower, x_upper)` on the standardized scale.
    /// The two-sided region puts `α_n / 2` in each tail.
    pub fn anchors(&self, family: Family, n: usize) -> Result<(f64, f64)> {
        let side = match self.side {
            ContaminationSide::Right => Side::Right,
            ContaminationSide::Left => Side::Left,
            ContaminationSide::Both => Side::TwoSided,
        };
        let reg = outlier_region(family, 0.0, 1.0, n, self.alpha_bar, side)?;
        Ok(match side {
            Side::Right => (f64::NEG_INFINITY, reg.lower),
            Side::Left => (reg.upper, f64::INFINITY),
            Side::TwoSided => (reg.lower, reg.upper),
        })
    }
}

/// Draw from `N(mu, rho²)` conditioned to exceed `a`.
fn truncated_normal_above<R: Rng + ?Sized>(rng: &mut R, a: f64, mu: f64, rho: f64) -> f64 {
    let lo = (a - mu) / rho;
    let u: f64 = rng.sample(Open01);
    let tail = normal_sf(lo);
    let z = if lo > 30.0 || tail < 1e-300 {
        // Rayleigh form of the far tail
        (lo * lo - 2.0 * u.ln()).sqrt()
    } else {
        -normal_quantile(u * tail)
    };
    (mu + rho * z).max(a)
}

fn contaminant<R: Rng + ?Sized>(rng: &mut R, kind: Contaminant, upper: bool, anchor: f64) -> f64 {
    match kind {
        Contaminant::TwoParamExponential { theta } => {
            let e: f64 = rng.sample(Exp1);
            if upper {
                anchor + theta * e
            } else {
                anchor - theta * e
            }
        }
        Contaminant::TruncatedNormal { mu, rho } => {
            if upper {
                truncated_normal_above(rng, anchor, mu, rho)
            } else {
                -truncated_normal_above(rng, -anchor, mu, rho)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub sample: Vec<f64>,
    /// Positions of the contaminants, ascending.
    pub contaminated: Vec<usize>,
}

fn fill<R: Rng + ?Sized>(rng: &mut R, family: Family, n: usize, spec: &ContaminationSpec, anchors: (f64, f64)) -> Replicate {
    let (r_right, r_left) = spec.split();
    let clean = n - spec.r;
    let mut sample: Vec<f64> = (0..clean).map(|_| family.sample(rng)).collect();
    for _ in 0..r_right {
        sample.push(contaminant(rng, spec.kind, true, anchors.1));
    }
    for _ in 0..r_left {
        sample.push(contaminant(rng, spec.kind, false, anchors.0));
    }
    Replicate { sample, contaminated: (clean..n).collect() }
}

/// Replicate `replicate_index` of a run seeded with `seed`. Contaminants
/// occupy the last `r` positions.
pub fn generate_replicate(
    family: Family,
    n: usize,
    spec: &ContaminationSpec,
    seed: u64,
    replicate_index: u64,
) -> Result<Replicate> {
    let anchors = spec.checked_anchors(family, n)?;
    let mut rng: ChaCha8Rng = mc::replicate_rng(seed, replicate_index);
    Ok(fill(&mut rng, family, n, spec, anchors))
}

/// Mean confusion counts over `M` replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub method: String,
    pub family: Family,
    pub n: usize,
    pub r: usize,
    pub param: f64,
    /// Contaminants declared outliers.
    pub d_oo: f64,
    /// Contaminants missed (masking).
    pub d_on: f64,
    /// Clean observations declared outliers (swamping).
    pub d_no: f64,
    pub d_nn: f64,
    /// Fraction of replicates with at least one declared outlier.
    pub significance: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Per-replicate variances of the four counts.
    pub var_oo: f64,
    pub var_on: f64,
    pub var_no: f64,
    pub var_nn: f64,
    /// Integer totals of the four counts over all replicates.
    pub totals: [u64; 4],
    pub fingerprint: String,
}

impl McResult {
    /// `max(0.05, 3 sqrt(v / M))`: acceptance half-width for a mean count
    /// with per-replicate variance `v`.
    pub fn tolerance(&self, variance: f64) -> f64 {
        (3.0 * (variance / self.replicates as f64).sqrt()).max(0.05)
    }
}

fn mean_var(sum: f64, sum_sq: f64, m: f64) -> (f64, f64) {
    let mean = sum / m;
    let var = if m > 1.0 { ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    (mean, var)
}

/// Runs `detector` on `m` seeded replicates and accumulates confusion counts.
pub fn run_experiment(
    detector: &dyn Detector,
    family: Family,
    n: usize,
    spec: &ContaminationSpec,
    m: usize,
    seed: u64,
) -> Result<McResult> {
    run_labelled(detector, detector.method().as_str(), family, n, spec, m, seed)
}

fn run_labelled(
    detector: &dyn Detector,
    label: &str,
    family: Family,
    n: usize,
    spec: &ContaminationSpec,
    m: usize,
    seed: u64,
) -> Result<McResult> {
    if m == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let anchors = spec.checked_anchors(family, n)?;
    // configuration problems surface once, before the parallel loop
    let first = fill(&mut mc::replicate_rng(seed, 0), family, n, spec, anchors);
    detector.classify(&first.sample)?;

    let r = spec.r;
    let counts: Vec<[u32; 4]> = mc::replicates(m, seed, |rng, _| {
        let rep = fill(rng, family, n, spec, anchors);
        let report = detector.classify(&rep.sample)?;
        let flags = report.flags();
        let caught = rep.contaminated.iter().filter(|&&i| flags[i]).count();
        let swamped = report.count() - caught;
        Ok([caught as u32, (r - caught) as u32, swamped as u32, (n - r - swamped) as u32])
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut totals = [0u64; 4];
    let mut sq = [0f64; 4];
    let mut rejections = 0u64;
    for c in &counts {
        for k in 0..4 {
            totals[k] += c[k] as u64;
            sq[k] += (c[k] as f64).powi(2);
        }
        if c[0] + c[2] > 0 {
            rejections += 1;
        }
    }
    let mf = m as f64;
    let stats: Vec<(f64, f64)> = (0..4).map(|k| mean_var(totals[k] as f64, sq[k], mf)).collect();
    Ok(McResult {
        method: label.to_string(),
        family,
        n,
        r,
        param: spec.kind.param(),
        d_oo: stats[0].0,
        d_on: stats[1].0,
        d_no: stats[2].0,
        d_nn: stats[3].0,
        significance: rejections as f64 / mf,
        replicates: m,
        seed,
        var_oo: stats[0].1,
        var_on: stats[1].1,
        var_no: stats[2].1,
        var_nn: stats[3].1,
        totals,
        fingerprint: format!("{label}|{family}|n={n}|{spec:?}|M={m}|seed={seed}"),
    })
}

/// A detection method with its tuning, before critical values are known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MethodSpec {
    Bp { side: Side, alpha: f64, s: usize },
    Dg { side: Side, alpha: f64, estimator: EstimatorKind },
    /// `s = None` uses `⌊0.4 n⌋`.
    Rosner { side: Side, alpha: f64, s: Option<usize> },
    Bolshev { side: Side, alpha: f64, s: usize },
    Hawkins { side: Side, alpha: f64, s: usize },
}

/// How critical values are simulated when they are not cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepareOptions {
    pub replicates: usize,
    pub seed: u64,
    /// Use simulated exact `u_α(n, s)` for BP instead of `v_α(s)`.
    pub exact_bp: bool,
    /// Apply BP to `ln x`.
    pub shape_scale: bool,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions { replicates: 100_000, seed: 1, exact_bp: false, shape_scale: false }
    }
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Bp { .. } => Method::Bp,
            MethodSpec::Dg { .. } => Method::Dg,
            MethodSpec::Rosner { .. } => Method::Rosner,
            MethodSpec::Bolshev { .. } => Method::Bolshev,
            MethodSpec::Hawkins { .. } => Method::Hawkins,
        }
    }

    pub fn side(&self) -> Side {
        match *self {
            MethodSpec::Bp { side, .. }
            | MethodSpec::Dg { side, .. }
            | MethodSpec::Rosner { side, .. }
            | MethodSpec::Bolshev { side, .. }
            | MethodSpec::Hawkins { side, .. } => side,
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            MethodSpec::Bp { alpha, .. }
            | MethodSpec::Dg { alpha, .. }
            | MethodSpec::Rosner { alpha, .. }
            | MethodSpec::Bolshev { alpha, .. }
            | MethodSpec::Hawkins { alpha, .. } => alpha,
        }
    }

    /// Short name used in experiment output, e.g. `dg_robust` or `rosner_s20`.
    pub fn label(&self, n: usize) -> String {
        match *self {
            MethodSpec::Bp { .. } => "bp".into(),
            MethodSpec::Dg { estimator, .. } => format!("dg_{estimator}"),
            MethodSpec::Rosner { s, .. } => format!("rosner_s{}", s.unwrap_or_else(|| rosner::default_s(n))),
            MethodSpec::Bolshev { s, .. } => format!("bolshev_s{s}"),
            MethodSpec::Hawkins { s, .. } => format!("hawkins_s{s}"),
        }
    }

    /// Builds a detector for samples of size `n`, simulating any critical
    /// value that is neither tabulated nor present in `cache`. New values are
    /// added to `cache`.
    pub fn prepare(
        &self,
        family: Family,
        n: usize,
        opts: &PrepareOptions,
        mut cache: Option<&mut CriticalValueTable>,
    ) -> Result<Box<dyn Detector>> {
        let method = self.method();
        let reps = opts.replicates;
        let mut scratch = CriticalValueTable::new();
        let table: &mut CriticalValueTable = match cache.as_deref_mut() {
            Some(t) => t,
            None => &mut scratch,
        };
        let seed_for = |key: &CriticalKey| mc::derive_seed(opts.seed, mc::tag(&format!("{key:?}")));
        Ok(match *self {
            MethodSpec::Bp { side, alpha, s } => {
                let mut cfg = BpConfig::with_s(family, side, alpha, s)?;
                if opts.exact_bp {
                    let key = CriticalKey::new(
                        method,
                        "u",
                        Some(family),
                        Some(EstimatorKind::MedQn),
                        Some(n),
                        s,
                        alpha,
                        Some(side),
                    );
                    let seed = seed_for(&key);
                    let u = table.get_or_insert_with(key, reps, seed, || {
                        bp::simulate_exact_critical_value_u(family, n, s, alpha, side, reps, seed)
                    })?;
                    cfg = cfg.with_critical(u, true)?;
                } else if bp::tabulated_v(s, cfg.effective_alpha()).is_none() {
                    let level = cfg.effective_alpha();
                    let key = CriticalKey::new(method, "v", None, None, None, s, level, None);
                    let v = table.get_or_insert_with(key, bp::V_REPLICATES, bp::V_SEED, || {
                        Ok(bp::asymptotic_critical_value(s, level))
                    })?;
                    cfg = cfg.with_critical(v, false)?;
                }
                Box::new(BpDetector { config: cfg, shape_scale: opts.shape_scale })
            }
            MethodSpec::Dg { side, alpha, estimator } => {
                let key = |q: &str| CriticalKey::new(method, q, Some(family), Some(estimator), Some(n), 0, alpha, Some(side));
                let keys = [key("g"), key("h"), key("gsym")];
                let cached: Option<Vec<f64>> = keys.iter().map(|k| table.get(k).map(|e| e.value)).collect();
                let th = match cached {
                    Some(v) => dg::DgThresholds {
                        family,
                        n,
                        alpha,
                        estimator,
                        side,
                        g_n_alpha: v[0],
                        h_n_1_alpha: v[1],
                        g_sym: v[2],
                    },
                    None => {
                        let seed = seed_for(&keys[0]);
                        let th = dg::dg_thresholds(family, n, alpha, estimator, side, reps, seed)?;
                        for (k, v) in keys.into_iter().zip([th.g_n_alpha, th.h_n_1_alpha, th.g_sym]) {
                            table.insert(k, crate::cache::CriticalEntry::now(v, reps, seed));
                        }
                        th
                    }
                };
                Box::new(dg::DgDetector { thresholds: th })
            }
            MethodSpec::Rosner { side, alpha, s } => {
                let s = s.unwrap_or_else(|| rosner::default_s(n));
                let cfg = if n >= rosner::APPROXIMATION_MIN_N {
                    rosner::RosnerConfig::approximate(n, s, alpha, side)?
                } else {
                    let key = |i: usize| {
                        CriticalKey::new(method, &format!("lambda{i}"), Some(family), Some(EstimatorKind::MeanSd), Some(n), s, alpha, Some(side))
                    };
                    let cached: Option<Vec<f64>> = (1..=s).map(|i| table.get(&key(i)).map(|e| e.value)).collect();
                    let lambdas = match cached {
                        Some(l) => l,
                        None => {
                            let seed = seed_for(&key(1));
                            let l = rosner::rosner_lambdas_simulated(n, s, alpha, side, reps, seed)?;
                            for (i, v) in l.iter().enumerate() {
                                table.insert(key(i + 1), crate::cache::CriticalEntry::now(*v, reps, seed));
                            }
                            l
                        }
                    };
                    rosner::RosnerConfig { n, s, alpha, side, lambdas, simulated: true }
                };
                Box::new(rosner::RosnerDetector { config: cfg })
            }
            MethodSpec::Bolshev { side, alpha, s } => {
                let key = CriticalKey::new(method, "tau", Some(family), Some(EstimatorKind::MeanSd), Some(n), s, alpha, Some(side));
                let seed = seed_for(&key);
                let c = table.get_or_insert_with(key, reps, seed, || {
                    bolshev::simulate_critical(family, n, s, alpha, side, reps, seed)
                })?;
                Box::new(bolshev::BolshevDetector { s, side, critical: c })
            }
            MethodSpec::Hawkins { side, alpha, s } => {
                let key = CriticalKey::new(method, "b", Some(family), Some(EstimatorKind::MeanSd), Some(n), s, alpha, Some(side));
                let seed = seed_for(&key);
                let c = table.get_or_insert_with(key, reps, seed, || {
                    hawkins::simulate_critical(family, n, s, alpha, side, reps, seed)
                })?;
                Box::new(hawkins::HawkinsDetector { s, side, critical: c })
            }
        })
    }
}

/// Prepares `method` for `n` and runs one experiment cell.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    method: &MethodSpec,
    family: Family,
    n: usize,
    spec: &ContaminationSpec,
    m: usize,
    seed: u64,
    opts: &PrepareOptions,
    cache: Option<&mut CriticalValueTable>,
) -> Result<McResult> {
    let detector = method.prepare(family, n, opts, cache)?;
    run_labelled(detector.as_ref(), &method.label(n), family, n, spec, m, seed)
}

/// Empirical level of `method` on clean samples for each size in `n_grid`.
pub fn significance_curve(
    method: &MethodSpec,
    family: Family,
    n_grid: &[usize],
    m: usize,
    seed: u64,
    opts: &PrepareOptions,
    mut cache: Option<&mut CriticalValueTable>,
) -> Result<Vec<(usize, f64)>> {
    n_grid
        .iter()
        .map(|&n| {
            let res = run_cell(method, family, n, &ContaminationSpec::none(), m, seed, opts, cache.as_deref_mut())?;
            Ok((n, res.significance))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_puts_odd_contaminant_right() {
        let s = ContaminationSpec::new(Contaminant::TwoParamExponential { theta: 1.0 }, ContaminationSide::Both, 5);
        assert_eq!(s.split(), (3, 2));
    }

    #[test]
    fn clean_replicate_has_no_contaminants() {
        let rep = generate_replicate(Family::Normal, 30, &ContaminationSpec::none(), 3, 0).unwrap();
        assert!(rep.contaminated.is_empty());
        assert_eq!(rep.sample.len(), 30);
    }

    #[test]
    fn contaminants_lie_in_region() {
        for side in [ContaminationSide::Right, ContaminationSide::Left, ContaminationSide::Both] {
            for kind in [
                Contaminant::TwoParamExponential { theta: 0.5 },
                Contaminant::TruncatedNormal { mu: 3.6, rho: 0.01 },
                Contaminant::TruncatedNormal { mu: 10.0, rho: 0.5 },
            ] {
                let spec = ContaminationSpec::new(kind, side, 6);
                let (lo, hi) = spec.anchors(Family::Normal, 100).unwrap();
                for i in 0..50 {
                    let rep = generate_replicate(Family::Normal, 100, &spec, 9, i).unwrap();
                    for &c in &rep.contaminated {
                        let v = rep.sample[c];
                        assert!(v > hi || v < lo, "{kind:?} {side:?} {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn bad_specs_rejected() {
        let s = ContaminationSpec::new(Contaminant::TwoParamExponential { theta: 0.0 }, ContaminationSide::Right, 2);
        assert!(s.validate(10).is_err());
        let t = ContaminationSpec::new(Contaminant::TwoParamExponential { theta: 1.0 }, ContaminationSide::Right, 10);
        assert!(t.validate(10).is_err());
        let inside = ContaminationSpec::new(Contaminant::TruncatedNormal { mu: 1.0, rho: 0.1 }, ContaminationSide::Right, 2);
        assert!(inside.checked_anchors(Family::Normal, 100).is_err());
    }

    #[test]
    fn far_truncation_stays_near_boundary() {
        let mut rng = mc::replicate_rng(1, 1);
        for _ in 0..1000 {
            let v = truncated_normal_above(&mut rng, 3.3, 0.1, 0.01);
            assert!((3.3..3.31).contains(&v), "{v}");
        }
    }
}
