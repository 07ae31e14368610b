//! The profile-optimum prior on the inverse temperature.
//!
//! `log P(tau) = -[tau * log L(theta_max(tau)) + log P(theta_max(tau))]` up to a
//! constant, which makes the joint density flat along the optimum ridge.

use std::collections::BTreeMap;
use std::sync::Arc;

use ordered_float::OrderedFloat;

use crate::error::{invalid, Error, Result};
use crate::interpolate::ProfileInterpolator;
use crate::model::{combine, tempered_log_posterior, TargetModel};
use crate::params::ParameterVector;

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub theta: ParameterVector,
    pub log_lik: f64,
    pub log_prior: f64,
}

impl CacheEntry {
    pub fn evaluate(model: &dyn TargetModel, theta: ParameterVector) -> Self {
        let log_prior = model.log_prior(&theta);
        let log_lik = if log_prior.is_finite() { model.log_lik(&theta) } else { f64::NEG_INFINITY };
        Self { theta, log_lik, log_prior }
    }

    pub fn tempered(&self, tau: f64) -> f64 {
        combine(tau, self.log_lik, self.log_prior)
    }
}

/// Optima keyed by inverse temperature, used for warm starts.
#[derive(Clone, Debug, Default)]
pub struct OptimumCache {
    entries: BTreeMap<OrderedFloat<f64>, CacheEntry>,
    capacity: Option<usize>,
    evaluations: Vec<usize>,
}

impl OptimumCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache that evicts the entry farthest from each new key once full.
    pub fn with_capacity(capacity: usize) -> Self {
        Self { capacity: Some(capacity.max(1)), ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, tau: f64) -> Option<&CacheEntry> {
        self.entries.get(&OrderedFloat(tau))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &CacheEntry)> {
        self.entries.iter().map(|(k, v)| (k.0, v))
    }

    /// Entry whose key is closest to `tau`; ties go to the smaller key.
    pub fn nearest(&self, tau: f64) -> Option<(f64, &CacheEntry)> {
        let key = OrderedFloat(tau);
        let below = self.entries.range(..=key).next_back();
        let above = self.entries.range(key..).next();
        match (below, above) {
            (Some(b), Some(a)) => {
                if (a.0 .0 - tau) < (tau - b.0 .0) {
                    Some((a.0 .0, a.1))
                } else {
                    Some((b.0 .0, b.1))
                }
            }
            (Some(b), None) => Some((b.0 .0, b.1)),
            (None, Some(a)) => Some((a.0 .0, a.1)),
            (None, None) => None,
        }
    }

    pub fn insert(&mut self, tau: f64, entry: CacheEntry) {
        if let Some(cap) = self.capacity {
            if self.entries.len() >= cap && !self.entries.contains_key(&OrderedFloat(tau)) {
                let far = self
                    .entries
                    .keys()
                    .copied()
                    .max_by(|a, b| (a.0 - tau).abs().total_cmp(&(b.0 - tau).abs()))
                    .unwrap();
                self.entries.remove(&far);
            }
        }
        self.entries.insert(OrderedFloat(tau), entry);
    }

    /// Optimizer evaluations spent on each fresh optimization, in call order.
    pub fn evaluation_log(&self) -> &[usize] {
        &self.evaluations
    }
}

/// Maximizer of the tempered posterior at `tau`, warm-started from the
/// nearest cached optimum (or the model's reference point).
pub fn theta_max(model: &dyn TargetModel, tau: f64, cache: &mut OptimumCache) -> Result<CacheEntry> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(invalid(format!("inverse temperature {tau} outside [0, 1]")));
    }
    if let Some(e) = cache.get(tau) {
        return Ok(e.clone());
    }
    let warm = cache
        .nearest(tau)
        .map(|(_, e)| e.theta.clone())
        .unwrap_or_else(|| model.reference_point());
    let opt = model.maximize(tau, &warm)?;
    cache.evaluations.push(opt.evaluations);
    let found = CacheEntry::evaluate(model, opt.theta);
    if !opt.converged {
        return Err(Error::NonConvergence {
            iterations: opt.evaluations,
            best_value: found.tempered(tau),
            best_point: model.layout().flatten(&found.theta),
        });
    }
    let start = CacheEntry::evaluate(model, warm);
    let entry = if found.tempered(tau) >= start.tempered(tau) || !start.tempered(tau).is_finite() {
        found
    } else {
        start
    };
    cache.insert(tau, entry.clone());
    Ok(entry)
}

/// Unnormalized log prior of `tau`: minus the tempered log-posterior at the optimum.
pub fn log_tau_prior_unnormalized(model: &dyn TargetModel, tau: f64, cache: &mut OptimumCache) -> Result<f64> {
    let e = theta_max(model, tau, cache)?;
    Ok(-e.tempered(tau))
}

/// Source of `theta_max(tau)` for the sampler.
#[derive(Clone, Debug)]
pub enum ProfilePrior {
    /// Fresh optimization per proposed tau, warm-started from a cache.
    Optimized(OptimumCache),
    /// Evaluation of a prebuilt optimum-manifold spline.
    Interpolated(Arc<ProfileInterpolator>),
}

impl ProfilePrior {
    pub fn optimized() -> Self {
        ProfilePrior::Optimized(OptimumCache::new())
    }

    pub fn optimum(&mut self, model: &dyn TargetModel, tau: f64) -> Result<CacheEntry> {
        match self {
            ProfilePrior::Optimized(cache) => theta_max(model, tau, cache),
            ProfilePrior::Interpolated(interp) => {
                let theta = interp.eval(tau);
                Ok(CacheEntry::evaluate(model, theta))
            }
        }
    }

    pub fn log_density(&mut self, model: &dyn TargetModel, tau: f64) -> Result<f64> {
        Ok(-self.optimum(model, tau)?.tempered(tau))
    }

    pub fn cache(&self) -> Option<&OptimumCache> {
        match self {
            ProfilePrior::Optimized(c) => Some(c),
            ProfilePrior::Interpolated(_) => None,
        }
    }
}

/// Largest improvement of the tempered log-posterior from moving one
/// continuous coordinate of `theta` by a relative `±rel` step.
pub fn perturbation_gain(model: &dyn TargetModel, theta: &ParameterVector, tau: f64, rel: f64) -> f64 {
    let base = tempered_log_posterior(model, theta, tau);
    let mut gain = f64::NEG_INFINITY;
    for i in 0..theta.continuous.len() {
        for sign in [-1.0, 1.0] {
            let mut t = theta.clone();
            let x = t.continuous[i];
            t.continuous[i] = x + sign * rel * x.abs().max(1e-300);
            gain = gain.max(tempered_log_posterior(model, &t, tau) - base);
        }
    }
    gain
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(v: f64) -> CacheEntry {
        CacheEntry { theta: ParameterVector::continuous(vec![v]), log_lik: 0.0, log_prior: 0.0 }
    }

    #[test]
    fn nearest_prefers_smaller_on_tie() {
        let mut c = OptimumCache::new();
        c.insert(0.2, entry(2.0));
        c.insert(0.4, entry(4.0));
        assert_eq!(c.nearest(0.3).unwrap().0, 0.2);
        assert_eq!(c.nearest(0.31).unwrap().0, 0.4);
        assert_eq!(c.nearest(0.0).unwrap().0, 0.2);
        assert_eq!(c.nearest(1.0).unwrap().0, 0.4);
        assert!(OptimumCache::new().nearest(0.5).is_none());
    }

    #[test]
    fn capacity_evicts_farthest() {
        let mut c = OptimumCache::with_capacity(2);
        c.insert(0.1, entry(1.0));
        c.insert(0.5, entry(5.0));
        c.insert(0.45, entry(4.5));
        let keys: Vec<f64> = c.iter().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![0.45, 0.5]);
    }
}
