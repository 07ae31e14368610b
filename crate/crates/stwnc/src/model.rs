//! The contract every target model implements.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::params::{ParameterLayout, ParameterVector};

/// A proposed parameter value and its log Hastings correction
/// `log q(theta | theta*) - log q(theta* | theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub theta: ParameterVector,
    pub log_hastings: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauProposal {
    pub tau: f64,
    pub log_hastings: f64,
}

/// Proposal kernel for the inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauKernel {
    /// tau* ~ U(0, 1) independent of the current value.
    UniformIndependence,
    /// tau* ~ N(0, 1) truncated to [0, 1], independent of the current value.
    TruncatedStdNormal,
    /// Gaussian random walk on log tau with the given step sd, reflected at
    /// log tau = 0.
    LogRandomWalk(f64),
}

impl TauKernel {
    pub fn propose(self, tau: f64, rng: &mut dyn RngCore) -> TauProposal {
        match self {
            TauKernel::UniformIndependence => TauProposal { tau: rng.random::<f64>(), log_hastings: 0.0 },
            TauKernel::TruncatedStdNormal => {
                let t = loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let z = z.abs();
                    if z <= 1.0 {
                        break z;
                    }
                };
                TauProposal { tau: t, log_hastings: self.log_hastings(tau, t) }
            }
            TauKernel::LogRandomWalk(sd) => {
                let z: f64 = StandardNormal.sample(rng);
                let mut x = tau.max(f64::MIN_POSITIVE).ln() + sd * z;
                if x > 0.0 {
                    x = -x;
                }
                let t = x.exp();
                TauProposal { tau: t, log_hastings: self.log_hastings(tau, t) }
            }
        }
    }

    /// `log q(from | to) - log q(to | from)`.
    pub fn log_hastings(self, from: f64, to: f64) -> f64 {
        match self {
            TauKernel::UniformIndependence => 0.0,
            TauKernel::TruncatedStdNormal => -0.5 * from * from + 0.5 * to * to,
            // symmetric in log tau, so only the Jacobian remains
            TauKernel::LogRandomWalk(_) => to.ln() - from.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub theta: ParameterVector,
    pub evaluations: usize,
    pub converged: bool,
}

pub trait TargetModel: Send + Sync {
    fn name(&self) -> &str;

    fn layout(&self) -> &ParameterLayout;

    /// Untempered log-likelihood; `-inf` outside the support.
    fn log_lik(&self, theta: &ParameterVector) -> f64;

    /// Log prior density; `-inf` outside the support.
    fn log_prior(&self, theta: &ParameterVector) -> f64;

    /// Random starting point for a chain.
    fn initial_theta(&self, rng: &mut dyn RngCore) -> ParameterVector;

    /// Deterministic warm start used when no cached optimum exists.
    fn reference_point(&self) -> ParameterVector;

    /// Number of Metropolis blocks in one sweep.
    fn proposal_blocks(&self) -> usize;

    /// Whether a block's step size responds to the adaptive scale multiplier.
    fn block_is_tunable(&self, _block: usize) -> bool {
        true
    }

    /// Propose a move of one block at inverse temperature `tau`. `scale`
    /// multiplies the model's default step size.
    fn propose_theta(
        &self,
        theta: &ParameterVector,
        block: usize,
        tau: f64,
        scale: f64,
        rng: &mut dyn RngCore,
    ) -> Proposal;

    fn tau_kernel(&self) -> TauKernel {
        TauKernel::UniformIndependence
    }

    fn propose_tau(&self, tau: f64, rng: &mut dyn RngCore) -> TauProposal {
        self.tau_kernel().propose(tau, rng)
    }

    /// Local maximizer of the tempered posterior at `tau`, started from `warm_start`.
    fn maximize(&self, tau: f64, warm_start: &ParameterVector) -> Result<Optimum>;

    /// A full Gibbs sweep at `tau` if the model offers one there.
    fn gibbs_sweep(&self, _theta: &ParameterVector, _tau: f64, _rng: &mut dyn RngCore) -> Option<ParameterVector> {
        None
    }
}

/// `tau * log_lik + log_prior`; the likelihood is skipped at `tau = 0` and
/// whenever the prior already vanishes.
pub fn tempered_log_posterior(model: &dyn TargetModel, theta: &ParameterVector, tau: f64) -> f64 {
    let lp = model.log_prior(theta);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    if tau == 0.0 {
        return lp;
    }
    combine(tau, model.log_lik(theta), lp)
}

/// Tempered log-posterior from cached pieces, with the same conventions.
pub fn combine(tau: f64, log_lik: f64, log_prior: f64) -> f64 {
    if log_prior == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if tau == 0.0 {
        return log_prior;
    }
    let v = tau * log_lik + log_prior;
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

pub(crate) fn std_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

pub(crate) fn uniform(rng: &mut dyn RngCore) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncated_normal_kernel_stays_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum = 0.0;
        let n = 200_000;
        for _ in 0..n {
            let p = TauKernel::TruncatedStdNormal.propose(0.3, &mut rng);
            assert!((0.0..=1.0).contains(&p.tau));
            assert!((p.log_hastings - (-0.045 + 0.5 * p.tau * p.tau)).abs() < 1e-15);
            sum += p.tau;
        }
        // mean of N(0,1) truncated to [0,1]: (phi(0)-phi(1))/(Phi(1)-Phi(0))
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let expect = (phi(0.0) - phi(1.0)) / 0.341_344_746_068_542_9;
        assert!((sum / n as f64 - expect).abs() < 3e-3);
    }
}
