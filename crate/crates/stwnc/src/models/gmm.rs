//! K-component univariate Gaussian mixture with conjugate priors.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::math::{inv_gamma_ln_pdf, normal_ln_pdf, LN_2PI};
use crate::model::{tempered_log_posterior, uniform, Optimum, Proposal, TargetModel};
use crate::models::{gaussian_move, log_normal_move};
use crate::optimize::OptimizerSettings;
use crate::params::{ParameterLayout, ParameterVector, Transform};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixturePriors {
    pub mean: f64,
    pub mean_var: f64,
    pub var_shape: f64,
    pub var_scale: f64,
    pub dirichlet: f64,
}

impl Default for MixturePriors {
    fn default() -> Self {
        Self { mean: 20.0, mean_var: 100.0, var_shape: 3.0, var_scale: 20.0, dirichlet: 1.0 }
    }
}

/// The five Galaxy comparisons as (components, equal variances).
pub const GALAXY_PRESETS: [(usize, bool); 5] = [(2, true), (3, false), (3, true), (4, false), (5, false)];

#[derive(Debug)]
pub struct GaussianMixtureModel {
    data: Vec<f64>,
    k: usize,
    equal_variances: bool,
    priors: MixturePriors,
    use_gibbs: bool,
    tempered_gibbs: bool,
    settings: OptimizerSettings,
    layout: ParameterLayout,
    name: String,
    mean_scale_var: f64,
    zero_row_fallbacks: AtomicU64,
}

/// Borrowed view of a mixture parameter vector.
pub struct MixtureView<'a> {
    pub mu: &'a [f64],
    pub sigma2: &'a [f64],
    pub p: &'a [f64],
}

impl<'a> MixtureView<'a> {
    pub fn sigma2_of(&self, k: usize) -> f64 {
        if self.sigma2.len() == 1 { self.sigma2[0] } else { self.sigma2[k] }
    }
}

impl GaussianMixtureModel {
    pub fn new(data: Vec<f64>, k: usize, equal_variances: bool) -> Result<Self> {
        if k == 0 {
            return Err(invalid("mixture needs at least one component"));
        }
        if data.is_empty() || data.iter().any(|y| !y.is_finite()) {
            return Err(invalid("mixture data must be non-empty and finite"));
        }
        let mut layout = ParameterLayout::default();
        for j in 1..=k {
            layout.push_continuous(format!("mu_{j}"), Transform::Identity);
        }
        if equal_variances {
            layout.push_continuous("sigma2", Transform::Log);
        } else {
            for j in 1..=k {
                layout.push_continuous(format!("sigma2_{j}"), Transform::Log);
            }
        }
        for j in 1..=k {
            layout.push_continuous(format!("p_{j}"), Transform::Identity);
        }
        let name = format!("gmm-k{k}-{}", if equal_variances { "equal" } else { "unequal" });
        let mean_scale_var = (crate::math::variance(&data) / k as f64).max(1e-6);
        Ok(Self {
            data,
            k,
            equal_variances,
            priors: MixturePriors::default(),
            use_gibbs: true,
            tempered_gibbs: false,
            settings: OptimizerSettings::default(),
            layout,
            name,
            mean_scale_var,
            zero_row_fallbacks: AtomicU64::new(0),
        })
    }

    pub fn with_priors(mut self, priors: MixturePriors) -> Self {
        self.priors = priors;
        self
    }

    /// Disable Gibbs sweeps entirely (Metropolis–Hastings everywhere).
    pub fn with_gibbs(mut self, enabled: bool) -> Self {
        self.use_gibbs = enabled;
        self
    }

    /// Allow the latent-allocation Gibbs sweep at tau < 1 as well.
    pub fn with_tempered_gibbs(mut self, enabled: bool) -> Self {
        self.tempered_gibbs = enabled;
        self
    }

    pub fn with_optimizer(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn equal_variances(&self) -> bool {
        self.equal_variances
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn priors(&self) -> MixturePriors {
        self.priors
    }

    /// Number of allocation rows that fell back to uniform weights.
    pub fn zero_row_fallbacks(&self) -> u64 {
        self.zero_row_fallbacks.load(Ordering::Relaxed)
    }

    fn n_var(&self) -> usize {
        if self.equal_variances { 1 } else { self.k }
    }

    pub fn view<'a>(&self, theta: &'a ParameterVector) -> MixtureView<'a> {
        let c = &theta.continuous;
        let (mu, rest) = c.split_at(self.k);
        let (sigma2, p) = rest.split_at(self.n_var());
        MixtureView { mu, sigma2, p }
    }

    pub fn pack(&self, mu: &[f64], sigma2: &[f64], p: &[f64]) -> ParameterVector {
        let mut c = Vec::with_capacity(self.layout.continuous.len());
        c.extend_from_slice(mu);
        c.extend_from_slice(sigma2);
        c.extend_from_slice(p);
        ParameterVector::continuous(c)
    }

    fn valid_simplex(p: &[f64]) -> bool {
        p.iter().all(|&x| x > 0.0 && x <= 1.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
    }

    /// sum_i log sum_k p_k N(y_i | mu_k, sigma2_k).
    pub fn log_lik_parts(&self, mu: &[f64], sigma2: &[f64], p: &[f64]) -> f64 {
        let k = self.k;
        let mut coef = [0.0f64; 16];
        let mut half_prec = [0.0f64; 16];
        let mut coef_v;
        let mut prec_v;
        let (coef, half_prec): (&mut [f64], &mut [f64]) = if k <= 16 {
            (&mut coef[..k], &mut half_prec[..k])
        } else {
            coef_v = vec![0.0; k];
            prec_v = vec![0.0; k];
            (&mut coef_v[..], &mut prec_v[..])
        };
        for j in 0..k {
            let s2 = if sigma2.len() == 1 { sigma2[0] } else { sigma2[j] };
            if !(s2 > 0.0) || !(p[j] >= 0.0) {
                return f64::NEG_INFINITY;
            }
            coef[j] = p[j].ln() - 0.5 * (LN_2PI + s2.ln());
            half_prec[j] = 0.5 / s2;
        }
        let mut total = 0.0;
        for &y in &self.data {
            let mut m = f64::NEG_INFINITY;
            for j in 0..k {
                let d = y - mu[j];
                m = m.max(coef[j] - half_prec[j] * d * d);
            }
            if m == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let mut s = 0.0;
            for j in 0..k {
                let d = y - mu[j];
                s += (coef[j] - half_prec[j] * d * d - m).exp();
            }
            total += m + s.ln();
        }
        total
    }

    /// Allocation probabilities with the Gaussian factors raised to `tau`.
    pub fn allocation_probabilities(&self, theta: &ParameterVector, tau: f64) -> Vec<Vec<f64>> {
        let v = self.view(theta);
        self.data
            .iter()
            .map(|&y| {
                let logw: Vec<f64> = (0..self.k)
                    .map(|j| {
                        let g = if tau == 0.0 { 0.0 } else { tau * normal_ln_pdf(y, v.mu[j], v.sigma2_of(j)) };
                        v.p[j].ln() + g
                    })
                    .collect();
                let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !m.is_finite() {
                    return Vec::new();
                }
                let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect()
    }

    /// Draw the latent allocation of every observation; labels index components.
    pub fn sample_allocations(&self, theta: &ParameterVector, tau: f64, rng: &mut dyn RngCore) -> Vec<usize> {
        self.allocation_probabilities(theta, tau)
            .into_iter()
            .map(|row| {
                if row.is_empty() || row.iter().any(|x| !x.is_finite()) {
                    self.zero_row_fallbacks.fetch_add(1, Ordering::Relaxed);
                    return ((uniform(rng) * self.k as f64) as usize).min(self.k - 1);
                }
                let u = uniform(rng);
                let mut acc = 0.0;
                for (j, w) in row.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return j;
                    }
                }
                self.k - 1
            })
            .collect()
    }

    /// One-hot indicator matrix for a set of allocations.
    pub fn indicator_matrix(&self, z: &[usize]) -> Vec<Vec<u8>> {
        z.iter()
            .map(|&j| (0..self.k).map(|c| u8::from(c == j)).collect())
            .collect()
    }

    /// Conditional updates of (mu, sigma2, p) given allocations `z`.
    pub fn gibbs_given_allocations(&self, theta: &ParameterVector, z: &[usize], tau: f64, rng: &mut dyn RngCore) -> ParameterVector {
        let pr = self.priors;
        let k = self.k;
        let v = self.view(theta);
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (&y, &j) in self.data.iter().zip(z) {
            counts[j] += 1;
            sums[j] += y;
        }
        let mut mu = vec![0.0; k];
        for j in 0..k {
            let s2 = v.sigma2_of(j);
            let prec = tau * counts[j] as f64 / s2 + 1.0 / pr.mean_var;
            let mean = (tau * sums[j] / s2 + pr.mean / pr.mean_var) / prec;
            mu[j] = Normal::new(mean, (1.0 / prec).sqrt()).unwrap().sample(rng);
        }
        let mut ss = vec![0.0; k];
        for (&y, &j) in self.data.iter().zip(z) {
            ss[j] += (y - mu[j]) * (y - mu[j]);
        }
        let inv_gamma = |shape: f64, scale: f64, rng: &mut dyn RngCore| -> f64 {
            let g: f64 = Gamma::new(shape, 1.0).unwrap().sample(rng);
            scale / g
        };
        let sigma2: Vec<f64> = if self.equal_variances {
            let n = self.data.len() as f64;
            let total: f64 = ss.iter().sum();
            vec![inv_gamma(pr.var_shape + 0.5 * tau * n, pr.var_scale + 0.5 * tau * total, rng)]
        } else {
            (0..k)
                .map(|j| inv_gamma(pr.var_shape + 0.5 * tau * counts[j] as f64, pr.var_scale + 0.5 * tau * ss[j], rng))
                .collect()
        };
        let g: Vec<f64> = (0..k)
            .map(|j| Gamma::new(pr.dirichlet + counts[j] as f64, 1.0).unwrap().sample(rng))
            .collect();
        let total: f64 = g.iter().sum();
        let mut p: Vec<f64> = g.iter().map(|x| (x / total).max(f64::MIN_POSITIVE)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        self.pack(&mu, &sigma2, &p)
    }

    /// Allocations followed by the parameter conditionals.
    pub fn gibbs_sweep_at(&self, theta: &ParameterVector, tau: f64, rng: &mut dyn RngCore) -> ParameterVector {
        let z = self.sample_allocations(theta, tau, rng);
        self.gibbs_given_allocations(theta, &z, tau, rng)
    }

    /// One conditional-ascent cycle of the tempered objective: untempered
    /// responsibilities, then the tempered conjugate updates of mu, sigma2, p.
    pub fn em_cycle(&self, theta: &ParameterVector, tau: f64) -> ParameterVector {
        let pr = self.priors;
        let k = self.k;
        let n = self.data.len() as f64;
        let v = self.view(theta);
        let r = if tau == 0.0 { Vec::new() } else { self.allocation_probabilities(theta, 1.0) };
        let mut nk = vec![0.0; k];
        let mut sy = vec![0.0; k];
        if tau > 0.0 {
            for (row, &y) in r.iter().zip(&self.data) {
                for j in 0..k {
                    nk[j] += row[j];
                    sy[j] += row[j] * y;
                }
            }
        }
        let mu: Vec<f64> = (0..k)
            .map(|j| {
                let s2 = v.sigma2_of(j);
                (tau * sy[j] / s2 + pr.mean / pr.mean_var) / (tau * nk[j] / s2 + 1.0 / pr.mean_var)
            })
            .collect();
        let mut ss = vec![0.0; k];
        if tau > 0.0 {
            for (row, &y) in r.iter().zip(&self.data) {
                for j in 0..k {
                    ss[j] += row[j] * (y - mu[j]) * (y - mu[j]);
                }
            }
        }
        let sigma2: Vec<f64> = if self.equal_variances {
            let total: f64 = ss.iter().sum();
            vec![(pr.var_scale + 0.5 * tau * total) / (pr.var_shape + 1.0 + 0.5 * tau * n)]
        } else {
            (0..k)
                .map(|j| (pr.var_scale + 0.5 * tau * ss[j]) / (pr.var_shape + 1.0 + 0.5 * tau * nk[j]))
                .collect()
        };
        // Dirichlet(a) prior: maximize (tau n_k + a - 1) log p_k on the simplex.
        let w: Vec<f64> = (0..k).map(|j| (tau * nk[j] + pr.dirichlet - 1.0).max(0.0)).collect();
        let wsum: f64 = w.iter().sum();
        let mut p: Vec<f64> = if wsum > 0.0 {
            w.iter().map(|x| (x / wsum).max(1e-300)).collect()
        } else {
            vec![1.0 / k as f64; k]
        };
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        self.pack(&mu, &sigma2, &p)
    }

    /// Starting point that separates the components by data quantiles.
    fn spread_start(&self) -> ParameterVector {
        let mut sorted = self.data.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mu: Vec<f64> = (0..self.k)
            .map(|j| sorted[(((j as f64 + 0.5) / self.k as f64) * n as f64) as usize % n])
            .collect();
        let s2 = vec![self.mean_scale_var; self.n_var()];
        let p = vec![1.0 / self.k as f64; self.k];
        self.pack(&mu, &s2, &p)
    }
}

impl TargetModel for GaussianMixtureModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn log_lik(&self, theta: &ParameterVector) -> f64 {
        let v = self.view(theta);
        self.log_lik_parts(v.mu, v.sigma2, v.p)
    }

    fn log_prior(&self, theta: &ParameterVector) -> f64 {
        let pr = self.priors;
        let v = self.view(theta);
        if !Self::valid_simplex(v.p) || v.mu.iter().any(|m| !m.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let mut lp = 0.0;
        for &m in v.mu {
            lp += normal_ln_pdf(m, pr.mean, pr.mean_var);
        }
        for &s in v.sigma2 {
            lp += inv_gamma_ln_pdf(s, pr.var_shape, pr.var_scale);
        }
        let k = self.k as f64;
        let a = pr.dirichlet;
        lp += ln_gamma(a * k) - k * ln_gamma(a);
        if a != 1.0 {
            lp += (a - 1.0) * v.p.iter().map(|x| x.ln()).sum::<f64>();
        }
        lp
    }

    fn initial_theta(&self, rng: &mut dyn RngCore) -> ParameterVector {
        let pr = self.priors;
        let normal = Normal::new(pr.mean, pr.mean_var.sqrt()).unwrap();
        let mu: Vec<f64> = (0..self.k).map(|_| normal.sample(rng)).collect();
        let s2: Vec<f64> = (0..self.n_var())
            .map(|_| {
                let g: f64 = Gamma::new(pr.var_shape, 1.0).unwrap().sample(rng);
                pr.var_scale / g
            })
            .collect();
        let p = vec![1.0 / self.k as f64; self.k];
        self.pack(&mu, &s2, &p)
    }

    fn reference_point(&self) -> ParameterVector {
        self.spread_start()
    }

    fn proposal_blocks(&self) -> usize {
        // one block per mean, one per variance, and the weights
        self.k + self.n_var() + usize::from(self.k > 1)
    }

    fn propose_theta(&self, theta: &ParameterVector, block: usize, tau: f64, scale: f64, rng: &mut dyn RngCore) -> Proposal {
        let pr = self.priors;
        let k = self.k;
        let m = self.n_var();
        let n = self.data.len() as f64;
        if block < k {
            let share = n / k as f64;
            let sd = 2.4 * (1.0 / (tau * share / self.mean_scale_var + 1.0 / pr.mean_var)).sqrt();
            return gaussian_move(theta, block..block + 1, scale * sd, rng);
        }
        if block < k + m {
            let share = n / m as f64;
            let sd = 2.4 * (1.0 / (pr.var_shape + 0.5 * tau * share)).sqrt();
            return log_normal_move(theta, block..block + 1, scale * sd, rng);
        }
        // Additive-logistic random walk on the weights.
        let off = k + m;
        let p = &theta.continuous[off..off + k];
        let sd = scale * 2.4 / ((k - 1) as f64).sqrt() * (1.0 / (1.0 + tau * n / k as f64)).sqrt();
        let last = p[k - 1].ln();
        let mut w: Vec<f64> = p.iter().map(|x| x.ln() - last).collect();
        for wj in w.iter_mut().take(k - 1) {
            *wj += sd * crate::model::std_normal(rng);
        }
        let mx = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|x| (x - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        let p_new: Vec<f64> = e.iter().map(|x| x / s).collect();
        let log_h = p_new.iter().map(|x| x.ln()).sum::<f64>() - p.iter().map(|x| x.ln()).sum::<f64>();
        let mut next = theta.clone();
        next.continuous[off..off + k].copy_from_slice(&p_new);
        Proposal { theta: next, log_hastings: log_h }
    }

    fn maximize(&self, tau: f64, warm_start: &ParameterVector) -> Result<Optimum> {
        let mut theta = if self.layout.contains(warm_start) && self.log_prior(warm_start).is_finite() {
            warm_start.clone()
        } else {
            self.spread_start()
        };
        let mut value = tempered_log_posterior(self, &theta, tau);
        for it in 1..=self.settings.max_iterations {
            let next = self.em_cycle(&theta, tau);
            let next_value = tempered_log_posterior(self, &next, tau);
            let change = next
                .continuous
                .iter()
                .zip(&theta.continuous)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if next_value >= value || !value.is_finite() {
                theta = next;
                value = next_value;
            } else {
                // rounding-level decrease: we are at the fixed point
                return Ok(Optimum { theta, evaluations: it, converged: true });
            }
            if change < self.settings.tolerance {
                return Ok(Optimum { theta, evaluations: it, converged: true });
            }
        }
        Ok(Optimum { theta, evaluations: self.settings.max_iterations, converged: false })
    }

    fn gibbs_sweep(&self, theta: &ParameterVector, tau: f64, rng: &mut dyn RngCore) -> Option<ParameterVector> {
        if !self.use_gibbs || (tau < 1.0 && !self.tempered_gibbs) {
            return None;
        }
        Some(self.gibbs_sweep_at(theta, tau, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k1_is_plain_gaussian() {
        let data = vec![1.0, 2.5, -0.3];
        let m = GaussianMixtureModel::new(data.clone(), 1, false).unwrap();
        let theta = m.pack(&[0.7], &[2.0], &[1.0]);
        let direct: f64 = data.iter().map(|&y| normal_ln_pdf(y, 0.7, 2.0)).sum();
        assert_relative_eq!(m.log_lik(&theta), direct, epsilon = 1e-12);
    }

    #[test]
    fn tau_zero_optimum_is_prior_mode() {
        let m = GaussianMixtureModel::new(vec![1.0, 9.0, 20.0, 31.0], 3, false).unwrap();
        let opt = m.maximize(0.0, &m.reference_point()).unwrap().theta;
        let v = m.view(&opt);
        for j in 0..3 {
            assert_relative_eq!(v.mu[j], 20.0, epsilon = 1e-12);
            assert_relative_eq!(v.sigma2[j], 5.0, epsilon = 1e-12);
            assert_relative_eq!(v.p[j], 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tau_zero_allocation_is_weights() {
        let m = GaussianMixtureModel::new(vec![1.0, 50.0], 2, false).unwrap();
        let theta = m.pack(&[0.0, 50.0], &[1.0, 1.0], &[0.3, 0.7]);
        for row in m.allocation_probabilities(&theta, 0.0) {
            assert_relative_eq!(row[0], 0.3, epsilon = 1e-14);
            assert_relative_eq!(row[1], 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn invalid_parameters() {
        let m = GaussianMixtureModel::new(vec![1.0], 2, true).unwrap();
        assert_eq!(m.log_lik(&m.pack(&[0.0, 1.0], &[0.0], &[0.5, 0.5])), f64::NEG_INFINITY);
        assert_eq!(m.log_prior(&m.pack(&[0.0, 1.0], &[1.0], &[0.6, 0.6])), f64::NEG_INFINITY);
    }
}
