//! Small numeric helpers shared by the models and estimators.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log density of N(mean, var) at `x`.
pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln()) - 0.5 * d * d / var
}

/// Log density of the inverse-gamma distribution with the given shape and scale.
pub fn inv_gamma_ln_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Log density of the gamma distribution parameterized by shape and rate.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x < 0.0 || (x == 0.0 && shape > 1.0) {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return if shape == 1.0 { rate.ln() } else { f64::INFINITY };
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn binomial_ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    binomial_ln_pmf_with(ln_choose(n, k), k, n, p)
}

/// Binomial log pmf with a precomputed log binomial coefficient.
pub fn binomial_ln_pmf_with(ln_coef: f64, k: u64, n: u64, p: f64) -> f64 {
    let kf = k as f64;
    let nk = (n - k) as f64;
    let a = if k == 0 { 0.0 } else { kf * p.ln() };
    let b = if n == k { 0.0 } else { nk * (-p).ln_1p() };
    ln_coef + a + b
}

/// log Phi(x) for the standard normal cdf, accurate far into the lower tail.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills-ratio expansion.
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - 0.5 * LN_2PI - (-x).ln() + series.ln()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_sum_exp_matches_naive() {
        let xs = [0.1, -2.0, 3.5];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&xs), naive, epsilon = 1e-14);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_relative_eq!(log_add_exp(1.0, 2.0), log_sum_exp(&[1.0, 2.0]), epsilon = 1e-15);
    }

    #[test]
    fn normal_cdf_tails() {
        assert_relative_eq!(ln_normal_cdf(0.0), 0.5f64.ln(), epsilon = 1e-15);
        // continuity across the switch to the asymptotic branch
        let lo = ln_normal_cdf(-30.0 - 1e-9);
        let hi = ln_normal_cdf(-30.0 + 1e-9);
        assert!((lo - hi).abs() < 1e-6);
        assert!(ln_normal_cdf(10.0).abs() < 1e-20);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let total: f64 = (0..=20).map(|k| binomial_ln_pmf(k, 20, 0.3).exp()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn densities_integrate_to_one() {
        // midpoint rule on the 1-d priors used by the models
        let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            (0..n).map(|i| f(a + (i as f64 + 0.5) * h).exp()).sum::<f64>() * h
        };
        assert_relative_eq!(integrate(&|x| normal_ln_pdf(x, 20.0, 100.0), -80.0, 120.0, 200_000), 1.0, epsilon = 1e-6);
        assert_relative_eq!(integrate(&|x| gamma_ln_pdf(x, 1.0, 1.0), 0.0, 60.0, 200_000), 1.0, epsilon = 1e-6);
        // inverse gamma in log space: density of log x is p(x) x
        let ig = |shape: f64, scale: f64| {
            integrate(&move |u: f64| inv_gamma_ln_pdf(u.exp(), shape, scale) + u, -15.0, 40.0, 400_000)
        };
        assert_relative_eq!(ig(3.0, 20.0), 1.0, epsilon = 1e-6);
        assert_relative_eq!(ig(1.0, 1.0), 1.0, epsilon = 1e-6);
    }
}
