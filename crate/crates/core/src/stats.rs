//! Goodness-of-fit statistics used by the validation studies.

use crate::numeric::normal_cdf;

/// Upper 1% critical value of the Anderson–Darling statistic for a fully
/// specified continuous null.
pub const AD_CRITICAL_1PCT: f64 = 3.857;

/// Upper 5% critical value of the Anderson–Darling statistic for a fully
/// specified continuous null.
pub const AD_CRITICAL_5PCT: f64 = 2.492;

/// Anderson–Darling statistic `A²` of `x` against the continuous CDF `cdf`.
pub fn anderson_darling<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let n = x.len();
    assert!(n > 0, "Anderson-Darling needs at least one observation");
    let mut z: Vec<f64> = x.iter().map(|v| cdf(*v).clamp(1e-300, 1.0 - 1e-16)).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let s: f64 = (0..n)
        .map(|i| (2.0 * i as f64 + 1.0) * (z[i].ln() + (1.0 - z[n - 1 - i]).ln()))
        .sum();
    -nf - s / nf
}

/// Anderson–Darling statistic against the standard normal.
pub fn anderson_darling_normal(x: &[f64]) -> f64 {
    anderson_darling(x, normal_cdf)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `x` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let n = x.len();
    assert!(n > 0, "KS statistic needs at least one observation");
    let mut z: Vec<f64> = x.iter().map(|v| cdf(*v)).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    z.iter()
        .enumerate()
        .map(|(i, f)| ((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf))
        .fold(0.0, f64::max)
}

/// Asymptotic upper-`level` critical value of `√n·D` (Kolmogorov
/// distribution), from `√(−ln(level/2)/2)`.
pub fn ks_critical(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Normal-approximation standard error of a binomial proportion.
pub fn proportion_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn anderson_darling_reference() {
        // mpmath evaluation of the defining sum at 30 digits
        let x = [-1.2, -0.3, 0.1, 0.4, 2.2];
        assert_abs_diff_eq!(anderson_darling_normal(&x), 0.407_435_317_664_937, epsilon = 1e-12);
    }

    #[test]
    fn ks_reference() {
        let x = [0.1, 0.4, 0.7];
        // steps at 1/3, 2/3, 1 against the identity CDF
        assert_abs_diff_eq!(ks_statistic(&x, |u| u), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(ks_critical(0.05), 1.358_1, epsilon = 1e-4);
    }

    #[test]
    fn normal_draws_pass() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::stream(11);
        let x: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(anderson_darling_normal(&x) < AD_CRITICAL_1PCT);
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.3).collect();
        assert!(anderson_darling_normal(&shifted) > AD_CRITICAL_1PCT);
    }
}
