use std::sync::OnceLock;

use outlierkit_core::bp::{bp_classify, BpConfig};
use outlierkit_core::distributions::chi2_even_cdf;
use outlierkit_core::estimators::{qn_scale, qn_scale_brute};
use outlierkit_core::simulation::{generate_replicate, run_cell};
use outlierkit_core::{
    CriticalEntry, CriticalKey, CriticalValueTable, Contaminant, ContaminationSide, ContaminationSpec, Detector,
    EstimatorKind, Family, Method, MethodSpec, PrepareOptions, Side,
};
use proptest::prelude::*;

const N: usize = 30;

fn detectors() -> &'static Vec<Box<dyn Detector>> {
    static CELL: OnceLock<Vec<Box<dyn Detector>>> = OnceLock::new();
    CELL.get_or_init(|| {
        let opts = PrepareOptions { replicates: 2_000, seed: 3, ..Default::default() };
        let side = Side::TwoSided;
        [
            MethodSpec::Bp { side, alpha: 0.05, s: 5 },
            MethodSpec::Dg { side, alpha: 0.05, estimator: EstimatorKind::MedQn },
            MethodSpec::Rosner { side, alpha: 0.05, s: Some(5) },
            MethodSpec::Bolshev { side, alpha: 0.05, s: 3 },
            MethodSpec::Hawkins { side, alpha: 0.05, s: 3 },
        ]
        .iter()
        .map(|m| m.prepare(Family::Normal, N, &opts, None).unwrap())
        .collect()
    })
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    // a bulk plus a few spread-out values so that every method has work to do
    (prop::collection::vec(-2.0f64..2.0, N - 4), prop::collection::vec(-15.0f64..15.0, 4)).prop_map(|(mut a, b)| {
        a.extend(b);
        a
    })
}

fn sides(d: &dyn Detector, x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let r = d.classify(x).unwrap();
    (r.outlier_indices_right, r.outlier_indices_left)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qn_fast_matches_brute_force(x in prop::collection::vec(-100.0f64..100.0, 2..=60)) {
        let fast = qn_scale(&x, Family::Normal).unwrap();
        let brute = qn_scale_brute(&x, Family::Normal).unwrap();
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn qn_fast_matches_brute_force_with_ties(x in prop::collection::vec(0u8..6, 2..=60)) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        prop_assert_eq!(qn_scale(&x, Family::Logistic).ok(), qn_scale_brute(&x, Family::Logistic).ok());
    }

    #[test]
    fn every_method_is_affine_equivariant(x in sample(), a in -1e3f64..1e3, b in 0.01f64..100.0) {
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        for d in detectors() {
            prop_assert_eq!(sides(d.as_ref(), &x), sides(d.as_ref(), &y), "{}", d.method());
        }
    }

    #[test]
    fn negation_swaps_sides(x in sample()) {
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        for d in detectors() {
            let (r, l) = sides(d.as_ref(), &x);
            prop_assert_eq!((l, r), sides(d.as_ref(), &y), "{}", d.method());
        }
    }

    #[test]
    fn permutation_moves_labels_with_values(x in sample(), shift in 1usize..N) {
        let y: Vec<f64> = (0..N).map(|i| x[(i + shift) % N]).collect();
        for d in detectors() {
            let fx = d.classify(&x).unwrap().flags();
            let fy = d.classify(&y).unwrap().flags();
            for i in 0..N {
                prop_assert_eq!(fy[i], fx[(i + shift) % N], "{}", d.method());
            }
        }
    }

    #[test]
    fn left_and_right_bp_mirror(x in sample()) {
        let right = BpConfig::new(Family::Normal, Side::Right, 0.05).unwrap();
        let left = BpConfig::new(Family::Normal, Side::Left, 0.05).unwrap();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(
            bp_classify(&x, &right).unwrap().outlier_indices_right,
            bp_classify(&y, &left).unwrap().outlier_indices_left
        );
    }

    #[test]
    fn chi2_is_monotone(k in 1usize..40, x in 0.0f64..200.0, dx in 0.0f64..10.0) {
        let lo = chi2_even_cdf(k, x).unwrap();
        let hi = chi2_even_cdf(k, x + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo);
        prop_assert!(chi2_even_cdf(k + 1, x).unwrap() <= lo);
    }

    #[test]
    fn cache_round_trip_is_exact(
        entries in prop::collection::vec((1usize..5000, 1usize..30, 1e-4f64..0.5, -1e3f64..1e3, any::<u64>()), 0..20)
    ) {
        let mut t = CriticalValueTable::new();
        for (n, s, alpha, v, seed) in entries {
            let key = CriticalKey::new(Method::Dg, "g", Some(Family::Laplace), Some(EstimatorKind::MedQn), Some(n), s, alpha, Some(Side::Right));
            t.insert(key, CriticalEntry::now(v, 1000, seed));
        }
        let back = CriticalValueTable::parse(&t.render()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn contaminants_are_last_and_in_region(r in 0usize..8, theta in 0.01f64..20.0, idx in 0u64..1000) {
        let spec = ContaminationSpec::new(Contaminant::TwoParamExponential { theta }, ContaminationSide::Both, r);
        let rep = generate_replicate(Family::Logistic, 40, &spec, 17, idx).unwrap();
        let (lo, hi) = spec.anchors(Family::Logistic, 40).unwrap();
        prop_assert_eq!(rep.contaminated.clone(), (40 - r..40).collect::<Vec<_>>());
        for &i in &rep.contaminated {
            prop_assert!(rep.sample[i] >= hi || rep.sample[i] <= lo);
        }
    }
}

#[test]
fn confusion_counts_partition_n() {
    let spec = ContaminationSpec::new(Contaminant::TwoParamExponential { theta: 1.0 }, ContaminationSide::Right, 3);
    let opts = PrepareOptions { replicates: 2_000, ..Default::default() };
    for m in [
        MethodSpec::Bp { side: Side::TwoSided, alpha: 0.05, s: 5 },
        MethodSpec::Rosner { side: Side::TwoSided, alpha: 0.05, s: Some(5) },
        MethodSpec::Hawkins { side: Side::Right, alpha: 0.05, s: 4 },
    ] {
        let res = run_cell(&m, Family::Normal, N, &spec, 300, 8, &opts, None).unwrap();
        assert_eq!(res.totals.iter().sum::<u64>(), (N * 300) as u64);
        assert_eq!(res.totals[0] + res.totals[1], 3 * 300);
        assert!((res.d_oo + res.d_on + res.d_no + res.d_nn - N as f64).abs() < 1e-9);
    }
}

#[test]
fn experiments_are_reproducible() {
    let spec = ContaminationSpec::new(Contaminant::TruncatedNormal { mu: 6.0, rho: 0.5 }, ContaminationSide::Left, 2);
    let m = MethodSpec::Dg { side: Side::TwoSided, alpha: 0.05, estimator: EstimatorKind::MedQn };
    let opts = PrepareOptions { replicates: 1_000, seed: 5, ..Default::default() };
    let a = run_cell(&m, Family::Normal, 25, &spec, 200, 4, &opts, None).unwrap();
    let b = run_cell(&m, Family::Normal, 25, &spec, 200, 4, &opts, None).unwrap();
    assert_eq!(a, b);
    let c = run_cell(&m, Family::Normal, 25, &spec, 200, 5, &opts, None).unwrap();
    assert_ne!(a.totals, c.totals);
}
