//! Paired t-test.
//!
//! The two-sided p-value of a t statistic with `df` degrees of freedom is
//! `I_x(df/2, 1/2)` with `x = df / (df + t^2)`, where `I` is the regularized
//! incomplete beta function. `I` is evaluated with the continued fraction of
//! Numerical Recipes (modified Lentz), using the symmetry
//! `I_x(a, b) = 1 - I_{1-x}(b, a)` to stay in the fast-converging region, and
//! `ln Gamma` comes from a Lanczos approximation (g = 7, 9 terms).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub mean_difference: f64,
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Paired t-test on `a - b` with `n - 1` degrees of freedom.
///
/// Zero variance of the differences is resolved by convention: identical
/// pairs give `t = 0, p = 1`; a constant nonzero shift gives `t = +-inf, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(mean), 0.0) };
        return Ok(TTest { t_statistic: t, p_value: p, df, mean_difference: mean });
    }
    let t = mean / (var / n as f64).sqrt();
    Ok(TTest { t_statistic: t, p_value: student_t_two_sided(t, df as f64), df, mean_difference: mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_example() {
        // scipy.stats.ttest_rel([1,2,3,4,5], [2,2,4,4,6]):
        // statistic=-2.4494897427831783, pvalue=0.07048399691021993
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 2.0, 4.0, 4.0, 6.0]).unwrap();
        assert_abs_diff_eq!(r.t_statistic, -2.4494897427831783, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.07048399691021993, epsilon = 1e-9);
        assert_eq!(r.df, 4);
    }

    #[test]
    fn degenerate_conventions() {
        let a = [0.1, 0.2, 0.3];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.t_statistic, f64::NEG_INFINITY);
        // shifts of 0.1 that differ in the last bit: tiny variance, p near 0
        let r = paired_t_test(&a, &[0.0, 0.1, 0.2]).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(paired_t_test(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn antisymmetric_statistic() {
        let a = [0.3, 0.1, 0.4, 0.15, 0.9, 0.26];
        let b = [0.2, 0.2, 0.1, 0.05, 0.5, 0.3];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.t_statistic, -ba.t_statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(regularized_incomplete_beta(1.0, 1.0, x), x, epsilon = 1e-13);
            assert_abs_diff_eq!(regularized_incomplete_beta(3.5, 1.0, x), x.powf(3.5), epsilon = 1e-13);
            assert_abs_diff_eq!(regularized_incomplete_beta(1.0, 2.5, x), 1.0 - (1.0 - x).powf(2.5), epsilon = 1e-13);
        }
        // t with 1 df is Cauchy: two-sided p = 1 - 2 atan(|t|) / pi
        for &t in &[0.1f64, 1.0, 3.0, 25.0] {
            let p = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
            assert_abs_diff_eq!(student_t_two_sided(t, 1.0), p, epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_gamma_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-12);
    }
}
