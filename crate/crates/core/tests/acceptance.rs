//! Acceptance criteria. Each test prints one `PASS` or `FAIL` line and then
//! asserts at the stated tolerance. Run with `--nocapture` to see the lines.

use std::time::{Duration, Instant};

use outlierkit_core::bp::{self, bp_classify, BpConfig};
use outlierkit_core::distributions::chi2_even_cdf;
use outlierkit_core::estimators::{qn_scale, qn_scale_brute};
use outlierkit_core::mc;
use outlierkit_core::simulation::{run_cell, significance_curve};
use outlierkit_core::{
    Contaminant, ContaminationSide, ContaminationSpec, Details, EstimatorKind, Family, McResult, MethodSpec,
    PrepareOptions, Side,
};

const SEED: u64 = 20_261_017;

fn verdict(criterion: &str, ok: bool, detail: &str) -> bool {
    println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn exponential(theta: f64, r: usize) -> ContaminationSpec {
    ContaminationSpec::new(Contaminant::TwoParamExponential { theta }, ContaminationSide::Both, r)
}

fn cell(method: MethodSpec, family: Family, n: usize, spec: ContaminationSpec, m: usize) -> McResult {
    run_cell(&method, family, n, &spec, m, SEED, &PrepareOptions::default(), None).unwrap()
}

const TWO: Side = Side::TwoSided;
const BP: MethodSpec = MethodSpec::Bp { side: TWO, alpha: 0.05, s: 5 };
const DG: MethodSpec = MethodSpec::Dg { side: TWO, alpha: 0.05, estimator: EstimatorKind::MedQn };
const ROSNER: MethodSpec = MethodSpec::Rosner { side: TWO, alpha: 0.05, s: None };

#[test]
fn criterion_1_worked_example() {
    let x = [
        6.10, 10.0, 6.20, -0.08, 0.63, -0.54, 1.37, 0.46, -0.22, 0.94, -0.69, -0.0, 0.05, -0.20, -0.25, -0.64, -6.30,
        -5.50, -12.10, -20.0,
    ];
    let start = Instant::now();
    let cfg = BpConfig::new(Family::Normal, TWO, 0.05).unwrap();
    let report = bp_classify(&x, &cfg).unwrap();
    let again = bp_classify(&x, &cfg).unwrap();
    let elapsed = start.elapsed();
    let declared: Vec<usize> = report.outliers().iter().map(|i| i + 1).collect();
    let Details::Bp { trails, .. } = &report.details else { panic!("not a BP report") };
    let t = &trails[0];
    let first = t.first_statistic();
    let u13 = t.steps.last().unwrap().u_values[4];
    let d4 = t.steps.last().unwrap().d_l;
    let ok = declared == [1, 2, 3, 17, 18, 19, 20]
        && first >= 0.9999
        && within(u13, 0.084290, 0.005)
        && d4 == 4
        && t.steps.len() == 4
        && report == again
        && elapsed < Duration::from_secs(1);
    let detail = format!(
        "declared {declared:?}, U(20,5) = {first:.6}, U_(13)(17) = {u13:.6}, d_4 = {d4}, steps = {}, {elapsed:?}",
        t.steps.len()
    );
    assert!(verdict("1", ok, &detail), "{detail}");
}

#[test]
fn criterion_2_asymptotic_critical_values() {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, target, tol) in [(0.05, 0.9853, 0.002), (0.1, 0.9677, 0.002), (0.01, 0.9975, 0.001)] {
        let v = bp::simulate_critical_value_v(5, alpha, 1_000_000, SEED);
        ok &= within(v, target, tol);
        parts.push(format!("v_{alpha}(5) = {v:.4} (target {target} ± {tol})"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    let detail = format!("{}, {elapsed:?}", parts.join(", "));
    assert!(verdict("2", ok, &detail), "{detail}");
}

#[test]
fn criterion_3_masking_at_n_50() {
    let thetas = [0.1, 1.0, 10.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, targets, tol) in
        [(BP, [2.00, 1.18, 0.15], 0.10), (DG, [4.70, 2.90, 0.48], 0.12), (ROSNER, [3.66, 2.04, 0.16], 0.12)]
    {
        for (theta, target) in thetas.iter().zip(targets) {
            let res = cell(method, Family::Normal, 50, exponential(*theta, 5), 10_000);
            let hit = within(res.d_on, target, tol);
            ok &= hit;
            parts.push(format!("{} θ={theta}: {:.3} vs {target}{}", res.method, res.d_on, if hit { "" } else { " (off)" }));
        }
    }
    let detail = parts.join("; ");
    assert!(verdict("3", ok, &detail), "{detail}");
}

#[test]
fn criterion_4_masking_at_n_1000() {
    let spec = exponential(1.0, 20);
    let bp = cell(BP, Family::Normal, 1000, spec, 2_000);
    let rosner = cell(ROSNER, Family::Normal, 1000, spec, 2_000);
    let ok = within(bp.d_on, 0.23, 0.15) && within(rosner.d_on, 1.76, 0.5);
    let detail = format!("bp D_ON = {:.3} (0.23 ± 0.15), {} D_ON = {:.3} (1.76 ± 0.5)", bp.d_on, rosner.method, rosner.d_on);
    assert!(verdict("4", ok, &detail), "{detail}");
}

#[test]
fn criterion_5_laplace_masking() {
    let spec = exponential(10.0, 5);
    let bp = cell(BP, Family::Laplace, 100, spec, 10_000);
    let dg = cell(DG, Family::Laplace, 100, spec, 10_000);
    let ok = within(bp.d_on, 0.66, 0.10) && within(dg.d_on, 0.59, 0.10);
    let detail = format!("bp D_ON = {:.3} (0.66 ± 0.10), dg D_ON = {:.3} (0.59 ± 0.10)", bp.d_on, dg.d_on);
    assert!(verdict("5", ok, &detail), "{detail}");
}

#[test]
fn criterion_6_hawkins_swamping() {
    let method = MethodSpec::Hawkins { side: Side::Right, alpha: 0.05, s: 5 };
    let spec =
        |r| ContaminationSpec::new(Contaminant::TruncatedNormal { mu: 10.0, rho: 0.01 }, ContaminationSide::Right, r);
    let one = cell(method, Family::Normal, 100, spec(1), 10_000);
    let five = cell(method, Family::Normal, 100, spec(5), 10_000);
    let ok = within(one.d_no, 3.99, 0.15)
        && within(one.d_oo, 1.00, 0.05)
        && five.d_no <= 0.05
        && within(five.d_oo, 3.96, 0.15);
    let detail = format!(
        "r=1: D_NO = {:.3}, D_OO = {:.3}; r=5: D_NO = {:.3}, D_OO = {:.3}",
        one.d_no, one.d_oo, five.d_no, five.d_oo
    );
    assert!(verdict("6", ok, &detail), "{detail}");
}

#[test]
fn criterion_7_bp_level() {
    let curve = significance_curve(&BP, Family::Normal, &[100, 500, 1000], 10_000, SEED, &PrepareOptions::default(), None)
        .unwrap();
    let in_band = curve.iter().all(|&(_, p)| (0.02..=0.08).contains(&p));
    let dist = |n: usize| (curve.iter().find(|c| c.0 == n).unwrap().1 - 0.05).abs();
    let ok = in_band && dist(1000) <= dist(100) + 0.01;
    let detail = format!("levels {curve:?}");
    assert!(verdict("7", ok, &detail), "{detail}");
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let (l, r) = ((b - a) / 12.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m)), (b - a) / 12.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b)));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    simpson(f, a, m, tol / 2.0, depth - 1) + simpson(f, m, b, tol / 2.0, depth - 1)
}

#[test]
fn criterion_8_properties() {
    let mut ok = true;
    let mut parts = Vec::new();

    // (a) affine equivariance of every method on 200 samples
    let n = 40;
    let opts = PrepareOptions { replicates: 5_000, seed: SEED, ..Default::default() };
    let detectors: Vec<_> = [
        BP,
        DG,
        MethodSpec::Rosner { side: TWO, alpha: 0.05, s: Some(8) },
        MethodSpec::Bolshev { side: TWO, alpha: 0.05, s: 4 },
        MethodSpec::Hawkins { side: TWO, alpha: 0.05, s: 4 },
    ]
    .iter()
    .map(|m| m.prepare(Family::Normal, n, &opts, None).unwrap())
    .collect();
    let samples = mc::replicates(200, SEED, |rng, i| {
        let mut x: Vec<f64> = (0..n).map(|_| Family::Normal.sample(rng)).collect();
        for v in x.iter_mut().take((i % 5) as usize) {
            *v *= 8.0;
        }
        x
    });
    let mut mismatches = 0;
    for (i, x) in samples.iter().enumerate() {
        let (a, b) = (-3.0 + 0.7 * i as f64, 0.05 + 0.4 * i as f64);
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        for d in &detectors {
            let (rx, ry) = (d.classify(x).unwrap(), d.classify(&y).unwrap());
            if rx.outlier_indices_right != ry.outlier_indices_right || rx.outlier_indices_left != ry.outlier_indices_left {
                mismatches += 1;
            }
        }
    }
    ok &= mismatches == 0;
    parts.push(format!("(a) {mismatches} equivariance mismatches"));

    // (b) chi-square closed form against quadrature of the density
    let mut worst: f64 = 0.0;
    for j in 0..100 {
        let k = 1 + j % 7;
        let x = 0.1 + 0.25 * j as f64;
        let ln_norm = k as f64 * 2f64.ln() + (1..k).map(|i| (i as f64).ln()).sum::<f64>();
        let dens = |t: f64| if t <= 0.0 { if k == 1 { 0.5 } else { 0.0 } } else { ((k as f64 - 1.0) * t.ln() - 0.5 * t - ln_norm).exp() };
        worst = worst.max((chi2_even_cdf(k, x).unwrap() - simpson(&dens, 0.0, x, 1e-13, 30)).abs());
    }
    ok &= worst <= 1e-10;
    parts.push(format!("(b) chi2 max error {worst:.2e}"));

    // (c) Qn against the brute-force pair enumeration
    let qn_ok = (2..=60).all(|n| {
        mc::replicates(5, SEED + n as u64, |rng, _| {
            let x: Vec<f64> = (0..n).map(|_| Family::Logistic.sample(rng)).collect();
            qn_scale(&x, Family::Normal).unwrap() == qn_scale_brute(&x, Family::Normal).unwrap()
        })
        .into_iter()
        .all(|b| b)
    });
    ok &= qn_ok;
    parts.push(format!("(c) Qn exact for n <= 60: {qn_ok}"));

    // (d) uniformity of the first-rank statistic under the null
    let mut u = bp::simulate_u_null(Family::Normal, 1000, 1, Side::Right, 10_000, SEED, 0.0, 1.0).unwrap();
    let ks = mc::ks_distance(&mut u, |v| v.clamp(0.0, 1.0));
    ok &= ks < 0.05;
    parts.push(format!("(d) KS = {ks:.4}"));

    // (e) the null law of U(n, s) does not depend on (mu, sigma)
    let m = 20_000;
    let mut a = bp::simulate_u_null(Family::Normal, 100, 5, TWO, m, SEED, 0.0, 1.0).unwrap();
    let mut b = bp::simulate_u_null(Family::Normal, 100, 5, TWO, m, SEED, 37.5, 0.02).unwrap();
    let (qa, qb) = (mc::empirical_quantile(&mut a, 0.95), mc::empirical_quantile(&mut b, 0.95));
    let se = (0.95 * 0.05 / m as f64).sqrt();
    let mc_error = 0.5 * (mc::quantile_of_sorted(&a, 0.95 + se) - mc::quantile_of_sorted(&a, 0.95 - se));
    ok &= (qa - qb).abs() < mc_error;
    parts.push(format!("(e) |u - u'| = {:.2e} < MC error {mc_error:.2e}", (qa - qb).abs()));

    let detail = parts.join("; ");
    assert!(verdict("8", ok, &detail), "{detail}");
}
