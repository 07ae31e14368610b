//! Gaussian likelihood in |mu|, which makes the posterior of mu bimodal.

use rand::RngCore;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{invalid, Result};
use crate::math::{inv_gamma_ln_pdf, ln_normal_cdf, log_add_exp, normal_ln_pdf, LN_2PI};
use crate::model::{tempered_log_posterior, Optimum, Proposal, TargetModel};
use crate::models::{gaussian_move, log_normal_move};
use crate::optimize::{coordinate_maximize, OptimizerSettings};
use crate::params::{ParameterLayout, ParameterVector, Transform};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BimodalMode {
    /// Only mu is sampled; the variance is pinned.
    OneParameter { sigma2: f64 },
    TwoParameter,
}

#[derive(Clone, Debug)]
pub struct BimodalModel {
    data: Vec<f64>,
    sum_y: f64,
    sum_y2: f64,
    mode: BimodalMode,
    prior_mean: f64,
    prior_var: f64,
    ig_shape: f64,
    ig_scale: f64,
    /// Variance used to size the mu proposal in two-parameter mode.
    sigma2_hint: f64,
    settings: OptimizerSettings,
    layout: ParameterLayout,
    name: String,
}

impl BimodalModel {
    pub fn new(data: Vec<f64>, mode: BimodalMode) -> Result<Self> {
        if let BimodalMode::OneParameter { sigma2 } = mode {
            if !(sigma2 > 0.0) {
                return Err(invalid("fixed variance must be positive"));
            }
        }
        if data.iter().any(|y| !y.is_finite()) {
            return Err(invalid("bimodal data must be finite"));
        }
        let mut layout = ParameterLayout::default();
        layout.push_continuous("mu", Transform::Identity);
        if mode == BimodalMode::TwoParameter {
            layout.push_continuous("sigma2", Transform::Log);
        }
        let sigma2_hint = {
            let v = crate::math::variance(&data);
            if v > 0.0 { v } else { 1.0 }
        };
        let name = match mode {
            BimodalMode::OneParameter { .. } => "bimodal-1p",
            BimodalMode::TwoParameter => "bimodal-2p",
        };
        Ok(Self {
            sum_y: data.iter().sum(),
            sum_y2: data.iter().map(|y| y * y).sum(),
            data,
            mode,
            prior_mean: 0.0,
            prior_var: 1.0,
            ig_shape: 1.0,
            ig_scale: 1.0,
            sigma2_hint,
            settings: OptimizerSettings::default(),
            layout,
            name: name.into(),
        })
    }

    pub fn one_parameter(data: Vec<f64>) -> Result<Self> {
        Self::new(data, BimodalMode::OneParameter { sigma2: 1.0 })
    }

    pub fn two_parameter(data: Vec<f64>) -> Result<Self> {
        Self::new(data, BimodalMode::TwoParameter)
    }

    pub fn with_optimizer(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Draw `n` observations from N(mu, sigma2).
    pub fn simulate_data(n: usize, mu: f64, sigma2: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        let normal = Normal::new(mu, sigma2.sqrt()).expect("valid normal");
        (0..n).map(|_| normal.sample(rng)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mode(&self) -> BimodalMode {
        self.mode
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    fn sigma2_of(&self, theta: &ParameterVector) -> f64 {
        match self.mode {
            BimodalMode::OneParameter { sigma2 } => sigma2,
            BimodalMode::TwoParameter => theta.continuous[1],
        }
    }

    /// sum_i log N(y_i | |mu|, sigma2).
    pub fn log_lik_at(&self, mu: f64, sigma2: f64) -> f64 {
        if !(sigma2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        let m = mu.abs();
        let ss: f64 = self.data.iter().map(|y| (y - m) * (y - m)).sum();
        -0.5 * self.data.len() as f64 * (LN_2PI + sigma2.ln()) - 0.5 * ss / sigma2
    }

    fn sum_sq(&self, mu: f64) -> f64 {
        let m = mu.abs();
        self.data.iter().map(|y| (y - m) * (y - m)).sum()
    }

    /// Conditional maximizer of mu at fixed variance; the positive branch wins ties.
    pub fn mu_conditional_max(&self, tau: f64, sigma2: f64) -> f64 {
        let n = self.data.len() as f64;
        let a = tau * n / sigma2 + 1.0 / self.prior_var;
        let prior_term = self.prior_mean / self.prior_var;
        let pos = ((tau * self.sum_y / sigma2 + prior_term) / a).max(0.0);
        let neg = ((-tau * self.sum_y / sigma2 + prior_term) / a).min(0.0);
        if pos == neg {
            return pos;
        }
        let f = |mu: f64| tau * self.log_lik_at(mu, sigma2) + normal_ln_pdf(mu, self.prior_mean, self.prior_var);
        if f(neg) > f(pos) {
            neg
        } else {
            pos
        }
    }

    /// Mode of the tempered inverse-gamma conditional of the variance.
    pub fn sigma2_conditional_max(&self, tau: f64, mu: f64) -> f64 {
        let n = self.data.len() as f64;
        (self.ig_scale + 0.5 * tau * self.sum_sq(mu)) / (self.ig_shape + 0.5 * tau * n + 1.0)
    }

    /// Closed-form conditional optimum at `tau`, iterated from `warm`.
    pub fn conditional_maximizers(&self, tau: f64, warm: &ParameterVector) -> Result<(ParameterVector, usize)> {
        match self.mode {
            BimodalMode::OneParameter { sigma2 } => {
                Ok((ParameterVector::continuous(vec![self.mu_conditional_max(tau, sigma2)]), 2))
            }
            BimodalMode::TwoParameter => {
                let start = if warm.continuous.len() == 2 && warm.continuous[1] > 0.0 && warm.is_finite() {
                    warm.continuous.clone()
                } else {
                    self.reference_point().continuous
                };
                let up_mu = |x: &mut [f64]| x[0] = self.mu_conditional_max(tau, x[1]);
                let up_s2 = |x: &mut [f64]| x[1] = self.sigma2_conditional_max(tau, x[0]);
                let objective = |x: &[f64]| tempered_log_posterior(self, &ParameterVector::continuous(x.to_vec()), tau);
                let r = coordinate_maximize(objective, &[&up_mu, &up_s2], &start, &self.settings)?;
                Ok((ParameterVector::continuous(r.x), r.history.len()))
            }
        }
    }

    /// Exact log marginal likelihood in one-parameter mode.
    pub fn analytic_log_evidence(&self) -> Result<f64> {
        let BimodalMode::OneParameter { sigma2 } = self.mode else {
            return Err(invalid("analytic evidence requires the one-parameter model"));
        };
        let n = self.data.len() as f64;
        if self.data.is_empty() {
            return Ok(0.0);
        }
        let (lambda, beta) = (self.prior_mean, self.prior_var);
        let a = n / sigma2 + 1.0 / beta;
        let b = self.sum_y / sigma2 + lambda / beta;
        let b1 = -self.sum_y / sigma2 + lambda / beta;
        let c = self.sum_y2 / sigma2 + lambda * lambda / beta;
        let sa = a.sqrt();
        let pos = 0.5 * b * b / a - 0.5 * c + ln_normal_cdf(b / sa);
        let neg = 0.5 * b1 * b1 / a - 0.5 * c + ln_normal_cdf(-b1 / sa);
        Ok(-0.5 * n * (LN_2PI + sigma2.ln()) - 0.5 * beta.ln() - 0.5 * a.ln() + log_add_exp(pos, neg))
    }
}

impl TargetModel for BimodalModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn log_lik(&self, theta: &ParameterVector) -> f64 {
        self.log_lik_at(theta.continuous[0], self.sigma2_of(theta))
    }

    fn log_prior(&self, theta: &ParameterVector) -> f64 {
        let mu = theta.continuous[0];
        let lp = normal_ln_pdf(mu, self.prior_mean, self.prior_var);
        match self.mode {
            BimodalMode::OneParameter { .. } => lp,
            BimodalMode::TwoParameter => lp + inv_gamma_ln_pdf(theta.continuous[1], self.ig_shape, self.ig_scale),
        }
    }

    fn initial_theta(&self, rng: &mut dyn RngCore) -> ParameterVector {
        let mu = Normal::new(self.prior_mean, self.prior_var.sqrt()).unwrap().sample(rng);
        match self.mode {
            BimodalMode::OneParameter { .. } => ParameterVector::continuous(vec![mu]),
            BimodalMode::TwoParameter => {
                let g: f64 = Gamma::new(self.ig_shape, 1.0).unwrap().sample(rng);
                ParameterVector::continuous(vec![mu, self.ig_scale / g])
            }
        }
    }

    fn reference_point(&self) -> ParameterVector {
        let s2 = self.ig_scale / (self.ig_shape + 1.0);
        match self.mode {
            BimodalMode::OneParameter { .. } => ParameterVector::continuous(vec![self.prior_mean]),
            BimodalMode::TwoParameter => ParameterVector::continuous(vec![self.prior_mean, s2]),
        }
    }

    fn proposal_blocks(&self) -> usize {
        match self.mode {
            BimodalMode::OneParameter { .. } => 1,
            BimodalMode::TwoParameter => 2,
        }
    }

    fn propose_theta(&self, theta: &ParameterVector, block: usize, tau: f64, scale: f64, rng: &mut dyn RngCore) -> Proposal {
        let n = self.data.len() as f64;
        match block {
            0 => {
                let s2 = match self.mode {
                    BimodalMode::OneParameter { sigma2 } => sigma2,
                    BimodalMode::TwoParameter => self.sigma2_hint,
                };
                let sd = 2.4 * (1.0 / (tau * n / s2 + 1.0 / self.prior_var)).sqrt();
                gaussian_move(theta, 0..1, scale * sd, rng)
            }
            _ => {
                let sd = 2.4 * (1.0 / (self.ig_shape + 0.5 * tau * n)).sqrt();
                log_normal_move(theta, 1..2, scale * sd, rng)
            }
        }
    }

    fn maximize(&self, tau: f64, warm_start: &ParameterVector) -> Result<Optimum> {
        let (theta, evaluations) = self.conditional_maximizers(tau, warm_start)?;
        Ok(Optimum { theta, evaluations, converged: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_zero_datum() {
        let m = BimodalModel::one_parameter(vec![0.0]).unwrap();
        assert_relative_eq!(m.log_lik_at(0.0, 1.0), -0.918_938_533_204_672_7, epsilon = 1e-12);
        assert_eq!(m.log_lik_at(0.3, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn empty_data() {
        let m = BimodalModel::one_parameter(vec![]).unwrap();
        assert_eq!(m.log_lik_at(2.0, 1.0), 0.0);
        assert_eq!(m.analytic_log_evidence().unwrap(), 0.0);
    }

    #[test]
    fn prior_endpoint_optimum() {
        let m = BimodalModel::two_parameter(vec![1.0, 2.0, 1.5]).unwrap();
        let (opt, _) = m.conditional_maximizers(0.0, &m.reference_point()).unwrap();
        assert_eq!(opt.continuous[0], 0.0);
        assert_relative_eq!(opt.continuous[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn evidence_requires_one_parameter_mode() {
        let m = BimodalModel::two_parameter(vec![1.0]).unwrap();
        assert!(m.analytic_log_evidence().is_err());
    }
}
