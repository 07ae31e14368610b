//! The three target models.

pub mod bimodal;
pub mod gmm;
pub mod sir;

pub use bimodal::{BimodalMode, BimodalModel};
pub use gmm::GaussianMixtureModel;
pub use sir::{SirData, SirModel};

use rand::RngCore;

use crate::math::ln_choose;
use crate::model::{std_normal, Proposal};
use crate::params::ParameterVector;

/// Log-normal random-walk move of continuous coordinates `idx`; the Hastings
/// term is the Jacobian `sum log(x*/x)`.
pub(crate) fn log_normal_move(
    theta: &ParameterVector,
    idx: std::ops::Range<usize>,
    sd: f64,
    rng: &mut dyn RngCore,
) -> Proposal {
    let mut next = theta.clone();
    let mut log_h = 0.0;
    for i in idx {
        let step = sd * std_normal(rng);
        next.continuous[i] = theta.continuous[i] * step.exp();
        log_h += step;
    }
    Proposal { theta: next, log_hastings: log_h }
}

pub(crate) fn gaussian_move(
    theta: &ParameterVector,
    idx: std::ops::Range<usize>,
    sd: f64,
    rng: &mut dyn RngCore,
) -> Proposal {
    let mut next = theta.clone();
    for i in idx {
        next.continuous[i] += sd * std_normal(rng);
    }
    Proposal { theta: next, log_hastings: 0.0 }
}

/// Precomputed `ln C(n, k)` for `k = 0..=n`.
pub(crate) fn ln_choose_table(n: u64) -> Vec<f64> {
    (0..=n).map(|k| ln_choose(n, k)).collect()
}
