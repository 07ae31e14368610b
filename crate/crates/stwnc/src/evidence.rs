//! Thermodynamic-integration estimates of the log marginal likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{mean, std_dev, variance};
use crate::tempering::{Algorithm, TraceSet};
use crate::trace::ChainId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TiStwnc,
    TiPtNb,
    TiPtB,
    Analytic,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::TiStwnc => "ti_stwnc",
            Method::TiPtNb => "ti_pt_nb",
            Method::TiPtB => "ti_pt_b",
            Method::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub log_ml: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub replicate_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variance_bound: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coverage_deficit: Option<f64>,
}

impl EvidenceEstimate {
    pub fn new(log_ml: f64, method: Method) -> Self {
        Self { log_ml, method, replicate_sd: None, variance_bound: None, coverage_deficit: None }
    }
}

/// (tau, log-likelihood) pairs kept sorted by tau.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TiSeries {
    pairs: Vec<(f64, f64)>,
}

impl TiSeries {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.iter().any(|(t, _)| !(0.0..=1.0).contains(t)) {
            return Err(invalid("TI series tau values must lie in [0, 1]"));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Union of several series (e.g. replicate runs).
    pub fn pooled<'a>(series: impl IntoIterator<Item = &'a TiSeries>) -> Self {
        let mut pairs: Vec<(f64, f64)> = series.into_iter().flat_map(|s| s.pairs.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Self { pairs }
    }

    /// Post-burn-in tempered-chain pairs plus target-chain pairs at tau = 1.
    pub fn from_pt_stwnc(run: &TraceSet) -> Result<Self> {
        let tempered = run.chain(ChainId::Tempered).ok_or_else(|| Error::Schema("run has no tempered chain".into()))?;
        let target = run.chain(ChainId::Target).ok_or_else(|| Error::Schema("run has no target chain".into()))?;
        let mut pairs = Vec::with_capacity(tempered.len() + target.len());
        let s = tempered.analysis_start();
        pairs.extend(tempered.tau[s..].iter().copied().zip(tempered.log_lik[s..].iter().copied()));
        let s = target.analysis_start();
        pairs.extend(target.log_lik[s..].iter().map(|&l| (1.0, l)));
        Self::new(pairs)
    }

    fn groups(&self) -> Vec<(f64, f64)> {
        // distinct tau values with the mean log-likelihood of their samples
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for &(t, l) in &self.pairs {
            match out.last_mut() {
                Some(g) if g.0 == t => {
                    g.1 += l;
                    g.2 += 1;
                }
                _ => out.push((t, l, 1)),
            }
        }
        out.into_iter().map(|(t, s, n)| (t, s / n as f64)).collect()
    }
}

/// Right-endpoint Riemann sum over the sorted series. Samples sharing a tau
/// value add no width; their log-likelihoods are averaged.
pub fn ti_stwnc(series: &TiSeries) -> Result<EvidenceEstimate> {
    if series.len() < 2 {
        return Err(invalid("ti_stwnc needs at least two samples"));
    }
    let g = series.groups();
    let total: f64 = g.windows(2).map(|w| (w[1].0 - w[0].0) * w[1].1).sum();
    let deficit = g[0].0 + (1.0 - g[g.len() - 1].0);
    let mut est = EvidenceEstimate::new(total, Method::TiStwnc);
    est.coverage_deficit = Some(deficit);
    est.variance_bound = decile_variances(series).map(|(v0, v1)| variance_bound(series, v0, v1));
    Ok(est)
}

fn check_schedule(schedule: &[f64], n: usize) -> Result<()> {
    if schedule.len() != n {
        return Err(invalid(format!("{n} chains but {} temperatures", schedule.len())));
    }
    if n < 2 {
        return Err(invalid("need at least two chains"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("schedule must be strictly increasing"));
    }
    Ok(())
}

/// Trapezoid rule over per-chain mean log-likelihoods. A schedule starting
/// above zero gets a rectangular panel `tau_1 * E_1` down to zero.
pub fn ti_pt_trapezoid(means: &[f64], schedule: &[f64]) -> Result<EvidenceEstimate> {
    check_schedule(schedule, means.len())?;
    let core: f64 = (1..means.len())
        .map(|t| 0.5 * (schedule[t] - schedule[t - 1]) * (means[t] + means[t - 1]))
        .sum();
    let ext = if schedule[0] > 0.0 { schedule[0] * means[0] } else { 0.0 };
    let mut est = EvidenceEstimate::new(core + ext, Method::TiPtNb);
    est.coverage_deficit = Some(0.0);
    Ok(est)
}

/// Per-panel Kullback–Leibler terms between adjacent tempered posteriors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelKl {
    /// KL(p_{t-1} || p_t)
    pub forward: f64,
    /// KL(p_t || p_{t-1})
    pub backward: f64,
    /// Estimated log z_t - log z_{t-1}
    pub offset: f64,
    /// delta_tau * (mean_t - mean_{t-1}), which the two KL terms must sum to
    pub symmetrized: f64,
}

/// KL terms for every panel. The unknown normalizing-constant increment of a
/// panel is replaced by the cubic-Hermite quadrature of the mean curve, using
/// `d/dtau E[log L] = Var[log L]` for the end slopes.
pub fn panel_kl_terms(samples: &[Vec<f64>], schedule: &[f64]) -> Result<Vec<PanelKl>> {
    check_schedule(schedule, samples.len())?;
    if samples.iter().any(|s| s.len() < 2) {
        return Err(invalid("every chain needs at least two samples"));
    }
    let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
    let vars: Vec<f64> = samples.iter().map(|s| variance(s)).collect();
    Ok((1..samples.len())
        .map(|t| {
            let d = schedule[t] - schedule[t - 1];
            let offset = 0.5 * d * (means[t] + means[t - 1]) - d * d * (vars[t] - vars[t - 1]) / 12.0;
            PanelKl {
                forward: -d * means[t - 1] + offset,
                backward: d * means[t] - offset,
                offset,
                symmetrized: d * (means[t] - means[t - 1]),
            }
        })
        .collect())
}

/// Trapezoid estimate plus half the summed KL differences.
pub fn ti_pt_bias_corrected(samples: &[Vec<f64>], schedule: &[f64]) -> Result<EvidenceEstimate> {
    let kl = panel_kl_terms(samples, schedule)?;
    let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
    let base = ti_pt_trapezoid(&means, schedule)?;
    let correction: f64 = kl.iter().map(|p| 0.5 * (p.forward - p.backward)).sum();
    let mut est = EvidenceEstimate::new(base.log_ml + correction, Method::TiPtB);
    est.coverage_deficit = Some(0.0);
    Ok(est)
}

/// Sample variances of log-likelihood in the bottom and top tenth of the
/// covered tau range.
pub fn decile_variances(series: &TiSeries) -> Option<(f64, f64)> {
    let p = series.pairs();
    let (lo, hi) = (p.first()?.0, p.last()?.0);
    let span = hi - lo;
    let bottom: Vec<f64> = p.iter().filter(|(t, _)| *t <= lo + 0.1 * span).map(|x| x.1).collect();
    let top: Vec<f64> = p.iter().filter(|(t, _)| *t >= hi - 0.1 * span).map(|x| x.1).collect();
    if bottom.len() < 2 || top.len() < 2 {
        return None;
    }
    Some((variance(&bottom), variance(&top)))
}

/// (Var at tau = 1, Var at tau = 0) divided by the series length.
pub fn variance_bound(series: &TiSeries, var_at_tau0: f64, var_at_tau1: f64) -> (f64, f64) {
    let n = series.len().max(1) as f64;
    (var_at_tau1 / n, var_at_tau0 / n)
}

pub fn log_bayes_factor(log_ml_1: f64, log_ml_2: f64) -> Result<f64> {
    if !log_ml_1.is_finite() || !log_ml_2.is_finite() {
        return Err(invalid("log Bayes factor needs finite log evidences"));
    }
    Ok(log_ml_1 - log_ml_2)
}

/// Mean of replicate estimates with their standard deviation.
pub fn combine_replicates(estimates: &[EvidenceEstimate]) -> Result<EvidenceEstimate> {
    let first = estimates.first().ok_or_else(|| invalid("no replicate estimates"))?;
    if estimates.iter().any(|e| e.method != first.method) {
        return Err(invalid("cannot combine estimates of different methods"));
    }
    let vals: Vec<f64> = estimates.iter().map(|e| e.log_ml).collect();
    let mut out = EvidenceEstimate::new(mean(&vals), first.method);
    out.replicate_sd = Some(if vals.len() > 1 { std_dev(&vals) } else { 0.0 });
    let deficits: Vec<f64> = estimates.iter().filter_map(|e| e.coverage_deficit).collect();
    if !deficits.is_empty() {
        out.coverage_deficit = Some(mean(&deficits));
    }
    Ok(out)
}

/// Post-burn-in log-likelihood samples per chain of a standard PT run.
pub fn pt_chain_samples(run: &TraceSet) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let Algorithm::StandardPt { schedule } = &run.algorithm else {
        return Err(Error::Schema("not a parallel-tempering run".into()));
    };
    let samples = run
        .chains
        .iter()
        .map(|(_, tr)| tr.log_lik[tr.analysis_start()..].to_vec())
        .collect();
    Ok((schedule.clone(), samples))
}

/// Both PT estimators from one run.
pub fn pt_estimates(run: &TraceSet) -> Result<(EvidenceEstimate, EvidenceEstimate)> {
    let (schedule, samples) = pt_chain_samples(run)?;
    let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
    Ok((ti_pt_trapezoid(&means, &schedule)?, ti_pt_bias_corrected(&samples, &schedule)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_chain_trapezoid() {
        let e = ti_pt_trapezoid(&[-3.0, -1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(e.log_ml, -2.0);
        assert!(ti_pt_trapezoid(&[1.0], &[1.0]).is_err());
        assert!(ti_pt_trapezoid(&[1.0, 2.0], &[0.5]).is_err());
    }

    #[test]
    fn stwnc_needs_two_pairs() {
        assert!(ti_stwnc(&TiSeries::new(vec![(0.5, 1.0)]).unwrap()).is_err());
        assert!(TiSeries::new(vec![(1.5, 1.0)]).is_err());
    }

    #[test]
    fn duplicate_taus_add_no_width() {
        let a = TiSeries::new(vec![(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)]).unwrap();
        let b = TiSeries::new(vec![(0.0, 1.0), (0.0, 7.0), (0.5, 2.0), (1.0, 3.0)]).unwrap();
        assert_eq!(ti_stwnc(&a).unwrap().log_ml, ti_stwnc(&b).unwrap().log_ml);
    }

    #[test]
    fn bayes_factor() {
        assert_eq!(log_bayes_factor(-3.0, -3.0).unwrap(), 0.0);
        assert_eq!(log_bayes_factor(-1.0, -4.0).unwrap(), -log_bayes_factor(-4.0, -1.0).unwrap());
        assert!(log_bayes_factor(f64::NAN, 0.0).is_err());
    }
}
