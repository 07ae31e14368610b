//! Convergence and Monte Carlo error summaries.

use std::collections::BTreeMap;
use std::hash::Hash;

use crate::error::{invalid, Result};
use crate::math::{mean, variance};

/// Gelman–Rubin potential scale reduction factor over `chains` (m >= 2
/// chains of equal length n >= 2).
pub fn psrf(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(invalid("psrf needs at least two chains"));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(invalid("psrf needs equal-length chains with at least two draws"));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / m as f64;
    let b = n as f64 * variance(&means);
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let nf = n as f64;
    Ok((((nf - 1.0) / nf * w + b / nf) / w).sqrt())
}

/// Batch-means standard error with floor(sqrt(n)) batches.
pub fn mc_error(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 4 {
        return Err(invalid("mc_error needs at least four samples"));
    }
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let batch_means: Vec<f64> = (0..batches).map(|b| mean(&samples[b * size..(b + 1) * size])).collect();
    Ok((variance(&batch_means) / batches as f64).sqrt())
}

/// Sample lag-1 autocorrelation; zero for constant input.
pub fn lag1_autocorr(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(invalid("lag1_autocorr needs at least two samples"));
    }
    let m = mean(samples);
    let denom: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let num: f64 = samples.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Ok(num / denom)
}

/// Fraction of samples carrying each label.
pub fn mode_occupancy<T, L, F>(samples: &[T], classify: F) -> BTreeMap<L, f64>
where
    L: Ord + Hash + Clone,
    F: Fn(&T) -> L,
{
    let mut counts: BTreeMap<L, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(classify(s)).or_default() += 1;
    }
    let n = samples.len().max(1) as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// Largest PSRF over several scalar functionals, each given as per-chain series.
pub fn max_psrf(functionals: &[Vec<&[f64]>]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for chains in functionals {
        worst = worst.max(psrf(chains)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_chains() {
        let c = [1.0; 10];
        assert_eq!(psrf(&[&c, &c]).unwrap(), 1.0);
        assert_eq!(mc_error(&c).unwrap(), 0.0);
        assert_eq!(lag1_autocorr(&c).unwrap(), 0.0);
        let d = [2.0; 10];
        assert_eq!(psrf(&[&c, &d]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn alternating_sign() {
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((lag1_autocorr(&x).unwrap() + 1.0).abs() < 2e-3);
    }

    #[test]
    fn separated_chains() {
        let a: Vec<f64> = (0..100).map(|i| (i % 3) as f64 * 1e-3).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(psrf(&[&a, &b]).unwrap() > 10.0);
    }

    #[test]
    fn occupancy() {
        let occ = mode_occupancy(&[1.0, -2.0, 3.0, 4.0], |x| *x > 0.0);
        assert_eq!(occ[&true], 0.75);
        assert_eq!(mode_occupancy(&[1, 1, 1], |_| "a")["a"], 1.0);
    }

    #[test]
    fn argument_checks() {
        assert!(psrf(&[&[1.0, 2.0]]).is_err());
        assert!(mc_error(&[1.0, 2.0, 3.0]).is_err());
        assert!(lag1_autocorr(&[1.0]).is_err());
    }
}
