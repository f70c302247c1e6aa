//! Special functions: error function, standard normal CDF and quantile,
//! chi-square with even degrees of freedom, and Student t wrappers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, StudentsT};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Complementary error function, accurate to a few ulps over the real line.
///
/// Uses the positive-term Taylor series of `erf` for `|x| < 2` and a
/// Lentz-evaluated continued fraction for the tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < 2.0 { erf_series(ax) } else { 1.0 - erfc_continued_fraction(ax) };
    v.copysign(x)
}

// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n x (2x^2)^n / (1*3*...*(2n+1))
fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= two_x2 / (2.0 * n + 1.0);
        sum += term;
        if n > 200.0 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x * x).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x > 0
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`, without cancellation in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation polished by
/// two Halley steps against [`normal_cdf`].
///
/// Returns `±inf` at 0 and 1 and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 - p is exact here
        return -lower_normal_quantile(1.0 - p);
    }
    lower_normal_quantile(p)
}

fn lower_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    let mut x = acklam(p);
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Survival function of chi-square with `2k` degrees of freedom:
/// `e^{-x/2} Σ_{j<k} (x/2)^j / j!`.
pub fn chi2_even_sf(k: usize, x: f64) -> f64 {
    debug_assert!(k >= 1);
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let y = 0.5 * x;
    if y > 500.0 {
        // log-space, terms would overflow
        let ly = y.ln();
        let mut ln_fact = 0.0;
        let mut total = 0.0;
        for j in 0..k {
            if j > 0 {
                ln_fact += (j as f64).ln();
            }
            total += (-y + j as f64 * ly - ln_fact).exp();
        }
        return total.min(1.0);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= y / j as f64;
        sum += term;
    }
    ((-y).exp() * sum).min(1.0)
}

/// CDF of chi-square with `2k` degrees of freedom in closed (Poisson-sum) form.
///
/// Below the mean the complementary tail series `e^{-y} Σ_{j≥k} y^j/j!` is
/// summed directly so small probabilities keep full relative precision.
pub fn chi2_even_cdf(k: usize, x: f64) -> f64 {
    debug_assert!(k >= 1);
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    let y = 0.5 * x;
    if y < k as f64 && y < 500.0 {
        let mut term = 1.0;
        for j in 1..=k {
            term *= y / j as f64;
        }
        let mut sum = 0.0;
        let mut j = k;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            j += 1;
            term *= y / j as f64;
            if term == 0.0 {
                break;
            }
        }
        return ((-y).exp() * sum).min(1.0);
    }
    1.0 - chi2_even_sf(k, x)
}

fn student(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).expect("degrees of freedom must be positive")
}

/// Student t CDF with `nu` degrees of freedom.
pub fn student_t_cdf(nu: f64, t: f64) -> f64 {
    student(nu).cdf(t)
}

/// Student t survival function.
pub fn student_t_sf(nu: f64, t: f64) -> f64 {
    student(nu).sf(t)
}

/// Upper-tail critical value: the `t` with `P(T > t) = p`.
pub fn student_t_upper(nu: f64, p: f64) -> f64 {
    -student(nu).inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_known_values() {
        assert_eq!(erfc(0.0), 1.0);
        // erfc(1), erfc(3) from tables to 15 digits
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc(3.0) / 2.209_049_699_858_544e-5 - 1.0).abs() < 1e-13);
        assert!((erf(-0.5) + 0.520_499_877_813_046_5).abs() < 1e-15);
    }

    #[test]
    fn erfc_is_continuous_at_branch_switch() {
        let lo = erfc(2.0 - 1e-12);
        let hi = erfc(2.0);
        assert!((lo - hi).abs() < 1e-13);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-7, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-6] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14, "p = {p}");
        }
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn chi2_two_df_is_exponential() {
        assert_eq!(chi2_even_cdf(1, 0.0), 0.0);
        assert!((chi2_even_cdf(1, 2.0 * 2f64.ln()) - 0.5).abs() < 1e-15);
        assert!((chi2_even_sf(1, 2.0) - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn chi2_huge_argument_does_not_overflow() {
        assert_eq!(chi2_even_sf(5, f64::INFINITY), 0.0);
        assert!(chi2_even_sf(5, 1e300) >= 0.0);
        assert!((chi2_even_cdf(5, 1e4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn student_upper_matches_table() {
        // t_{0.025}(10) = 2.228139
        assert!((student_t_upper(10.0, 0.025) - 2.228_138_851_986_274).abs() < 1e-9);
        assert!((student_t_cdf(10.0, 0.0) - 0.5).abs() < 1e-15);
    }
}
