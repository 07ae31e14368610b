//! SIR epidemic model with binomial observation of cumulative removals.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::math::{binomial_ln_pmf, binomial_ln_pmf_with};
use crate::model::{std_normal, Optimum, Proposal, TargetModel, TauKernel};
use crate::models::ln_choose_table;
use crate::ode::{integrate, OdeError, OdeProblem};
use crate::optimize::{discrete_line_search, nelder_mead, Maximum, OptimizerSettings};
use crate::params::{ParameterLayout, ParameterVector, Transform};

/// Smallest inverse temperature handed to the optimizer; the Gamma(1, 1)
/// prior mode sits on the boundary at tau = 0.
pub const TAU_FLOOR: f64 = 1e-15;
const PROB_CLAMP: f64 = 1e-12;
const LOG_BOX: (f64, f64) = (-25.0, 5.0);

#[derive(Clone, Debug, PartialEq)]
pub struct SirData {
    pub population: u64,
    pub times: Vec<f64>,
    /// Cumulative removals observed at `times`.
    pub removed: Vec<u64>,
    /// (index into `times`, infected count) observations.
    pub infected: Vec<(usize, u64)>,
}

impl SirData {
    pub fn new(population: u64, times: Vec<f64>, removed: Vec<u64>, infected: Vec<(usize, u64)>) -> Result<Self> {
        if times.len() != removed.len() || times.is_empty() {
            return Err(invalid("SIR times and counts must be non-empty and of equal length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
            return Err(invalid("SIR observation times must be non-negative and strictly increasing"));
        }
        if removed.iter().any(|&r| r > population) || infected.iter().any(|&(i, x)| i >= times.len() || x > population) {
            return Err(invalid("SIR counts exceed the population or index a missing time"));
        }
        Ok(Self { population, times, removed, infected })
    }

    /// Daily series where the last two infected counts are 1 and then 0.
    pub fn with_terminal_constraints(population: u64, times: Vec<f64>, removed: Vec<u64>) -> Result<Self> {
        let n = times.len();
        if n < 2 {
            return Err(invalid("need at least two observation times"));
        }
        Self::new(population, times, removed, vec![(n - 2, 1), (n - 1, 0)])
    }
}

/// Day-step chain-binomial SIR simulation. Returns the daily (infected,
/// cumulative removed) counts until extinction or `max_days`.
pub fn simulate_chain_binomial(
    population: u64,
    i0: u64,
    alpha: f64,
    beta: f64,
    max_days: usize,
    rng: &mut dyn RngCore,
) -> (Vec<u64>, Vec<u64>) {
    let (mut s, mut i, mut r) = (population - i0, i0, 0u64);
    let mut infected = vec![i];
    let mut removed = vec![r];
    let p_rec = 1.0 - (-alpha).exp();
    for _ in 0..max_days {
        if i == 0 {
            break;
        }
        let p_inf = 1.0 - (-beta * i as f64).exp();
        let new_inf = Binomial::new(s, p_inf).unwrap().sample(rng);
        let new_rec = Binomial::new(i, p_rec).unwrap().sample(rng);
        s -= new_inf;
        i = i + new_inf - new_rec;
        r += new_rec;
        infected.push(i);
        removed.push(r);
    }
    (infected, removed)
}

#[derive(Debug)]
pub struct SirModel {
    data: SirData,
    output_times: Vec<f64>,
    offset: usize,
    ln_coef_removed: Vec<f64>,
    ln_coef_infected: Vec<f64>,
    candidates: Vec<i64>,
    i0_prior_p: f64,
    settings: OptimizerSettings,
    rtol: f64,
    atol: f64,
    layout: ParameterLayout,
    reference: ParameterVector,
    /// Observed information of the log-likelihood in (log alpha, log beta).
    info: [[f64; 2]; 2],
    ode_failures: AtomicU64,
    tau_kernel: TauKernel,
    /// Conditional tau = 1 optima in (log alpha, log beta) for I(0) = 1, 2, ...;
    /// when present the I(0) move carries (alpha, beta) along the ridge.
    ridge: Option<Vec<[f64; 2]>>,
}

impl SirModel {
    pub fn new(data: SirData) -> Result<Self> {
        Self::with_settings(data, OptimizerSettings::default(), (1..=8).collect())
    }

    pub fn with_settings(data: SirData, settings: OptimizerSettings, candidates: Vec<i64>) -> Result<Self> {
        settings.validate()?;
        if candidates.is_empty() || candidates.iter().any(|&k| k < 0 || k as u64 > data.population) {
            return Err(invalid("I(0) candidates must lie in [0, N]"));
        }
        let (output_times, offset) = if data.times[0] == 0.0 {
            (data.times.clone(), 0)
        } else {
            let mut t = vec![0.0];
            t.extend_from_slice(&data.times);
            (t, 1)
        };
        let table = ln_choose_table(data.population);
        let ln_coef_removed = data.removed.iter().map(|&r| table[r as usize]).collect();
        let ln_coef_infected = data.infected.iter().map(|&(_, x)| table[x as usize]).collect();
        let mut layout = ParameterLayout::default();
        layout.push_continuous("alpha", Transform::Log);
        layout.push_continuous("beta", Transform::Log);
        layout.push_discrete("i0", 0, data.population as i64);
        let n = data.population as f64;
        let mut model = Self {
            i0_prior_p: 5.0 / n,
            output_times,
            offset,
            ln_coef_removed,
            ln_coef_infected,
            candidates,
            settings,
            rtol: 1e-8,
            atol: 1e-10,
            layout,
            reference: ParameterVector::new(vec![0.1, 0.1 / n], vec![5]),
            info: [[1.0, 0.0], [0.0, 1.0]],
            ode_failures: AtomicU64::new(0),
            tau_kernel: TauKernel::TruncatedStdNormal,
            ridge: None,
            data,
        };
        model.calibrate()?;
        Ok(model)
    }

    pub fn with_tau_kernel(mut self, kernel: TauKernel) -> Self {
        self.tau_kernel = kernel;
        self
    }

    /// Pair every I(0) proposal with a shift of (log alpha, log beta) by the
    /// difference of the conditional posterior modes at the two I(0) values.
    /// The shift is a translation, so only the binomial and log-normal
    /// Jacobian terms enter the Hastings ratio.
    pub fn with_ridge_jumps(mut self) -> Result<Self> {
        let top = 2 * *self.candidates.iter().max().unwrap() as usize;
        let mut start = [self.reference.continuous[0].ln(), self.reference.continuous[1].ln()];
        let mut table = Vec::with_capacity(top);
        for k in 1..=top.min(self.data.population as usize) {
            let m = self.maximize_continuous(1.0, k as i64, start)?;
            start = [m.x[0], m.x[1]];
            table.push(start);
        }
        self.ridge = Some(table);
        Ok(self)
    }

    fn ridge_point(&self, i0: i64) -> Option<[f64; 2]> {
        let t = self.ridge.as_ref()?;
        Some(t[(i0.max(1) as usize - 1).min(t.len() - 1)])
    }

    pub fn data(&self) -> &SirData {
        &self.data
    }

    pub fn candidates(&self) -> &[i64] {
        &self.candidates
    }

    pub fn ode_failures(&self) -> u64 {
        self.ode_failures.load(Ordering::Relaxed)
    }

    /// (S, I, R) at every observation time.
    pub fn trajectory(&self, alpha: f64, beta: f64, i0: i64) -> std::result::Result<Vec<[f64; 3]>, OdeError> {
        let n = self.data.population as f64;
        let rhs = move |_t: f64, y: &[f64], d: &mut [f64]| {
            let inf = beta * y[0] * y[1];
            let rem = alpha * y[1];
            d[0] = -inf;
            d[1] = inf - rem;
            d[2] = rem;
        };
        let problem = OdeProblem::new(rhs, vec![n - i0 as f64, i0 as f64, 0.0], self.output_times.clone())
            .with_tolerances(self.rtol, self.atol);
        let out = integrate(&problem)?;
        Ok(out[self.offset..].iter().map(|r| [r[0], r[1], r[2]]).collect())
    }

    pub fn log_lik_at(&self, alpha: f64, beta: f64, i0: i64) -> f64 {
        if !(alpha > 0.0) || !(beta >= 0.0) || i0 < 0 || i0 as u64 > self.data.population {
            return f64::NEG_INFINITY;
        }
        let traj = match self.trajectory(alpha, beta, i0) {
            Ok(t) => t,
            Err(_) => {
                self.ode_failures.fetch_add(1, Ordering::Relaxed);
                return f64::NEG_INFINITY;
            }
        };
        let n_pop = self.data.population;
        let n = n_pop as f64;
        let prob = |x: f64| (x.max(0.0) / n).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let mut ll = 0.0;
        for ((state, &r), &c) in traj.iter().zip(&self.data.removed).zip(&self.ln_coef_removed) {
            ll += binomial_ln_pmf_with(c, r, n_pop, prob(state[2]));
        }
        for (&(idx, x), &c) in self.data.infected.iter().zip(&self.ln_coef_infected) {
            ll += binomial_ln_pmf_with(c, x, n_pop, prob(traj[idx][1]));
        }
        ll
    }

    fn prior_at(&self, alpha: f64, beta: f64, i0: i64) -> f64 {
        if !(alpha > 0.0) || !(beta > 0.0) || i0 < 0 || i0 as u64 > self.data.population {
            return f64::NEG_INFINITY;
        }
        -alpha - beta + binomial_ln_pmf(i0 as u64, self.data.population, self.i0_prior_p)
    }

    /// Best (log alpha, log beta) for a fixed I(0), with one simplex restart.
    pub fn maximize_continuous(&self, tau: f64, i0: i64, start: [f64; 2]) -> Result<Maximum> {
        let objective = |x: &[f64]| {
            if x.iter().any(|v| !(LOG_BOX.0..=LOG_BOX.1).contains(v)) {
                return f64::NEG_INFINITY;
            }
            let (a, b) = (x[0].exp(), x[1].exp());
            tau * self.log_lik_at(a, b, i0) + self.prior_at(a, b, i0)
        };
        let clamp = |v: f64| v.clamp(LOG_BOX.0 + 1e-9, LOG_BOX.1 - 1e-9);
        let x0 = [clamp(start[0]), clamp(start[1])];
        let first = nelder_mead(objective, &x0, &self.settings)?;
        let second = nelder_mead(objective, &first.x, &self.settings)?;
        let best = if second.value >= first.value { second.clone() } else { first.clone() };
        Ok(Maximum {
            evaluations: first.evaluations + second.evaluations,
            iterations: first.iterations + second.iterations,
            converged: second.converged,
            ..best
        })
    }

    /// Lower Cholesky factor of (tau * info + I)^-1.
    fn step_cholesky(&self, tau: f64) -> [[f64; 2]; 2] {
        let a = tau * self.info[0][0] + 1.0;
        let b = tau * self.info[0][1];
        let d = tau * self.info[1][1] + 1.0;
        let det = a * d - b * b;
        let (s00, s01, s11) = (d / det, -b / det, a / det);
        let l00 = s00.sqrt();
        let l10 = s01 / l00;
        [[l00, 0.0], [l10, (s11 - l10 * l10).max(0.0).sqrt()]]
    }

    fn calibrate(&mut self) -> Result<()> {
        // Coarse grid for a start point, then the full discrete search at tau = 1.
        let n = self.data.population as f64;
        let mid = self.candidates[self.candidates.len() / 2];
        let mut best = (f64::NEG_INFINITY, [0.0; 2]);
        for i in 0..25 {
            for j in 0..25 {
                let la = (0.01f64).ln() + i as f64 * (100.0f64).ln() / 24.0;
                let r0 = 0.5 + j as f64 * 4.5 / 24.0;
                let lb = (r0 * la.exp() / n).ln();
                let v = self.log_lik_at(la.exp(), lb.exp(), mid) + self.prior_at(la.exp(), lb.exp(), mid);
                if v > best.0 {
                    best = (v, [la, lb]);
                }
            }
        }
        let start = ParameterVector::new(vec![best.1[0].exp(), best.1[1].exp()], vec![mid]);
        let opt = self.maximize(1.0, &start)?;
        let theta = opt.theta;
        let (a, b, k) = (theta.continuous[0], theta.continuous[1], theta.discrete[0]);
        let h = 1e-3;
        let f = |da: f64, db: f64| self.log_lik_at(a * da.exp(), b * db.exp(), k);
        let f0 = f(0.0, 0.0);
        let haa = -(f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
        let hbb = -(f(0.0, h) - 2.0 * f0 + f(0.0, -h)) / (h * h);
        let hab = -(f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let info = [[haa, hab], [hab, hbb]];
        self.info = if haa > 0.0 && hbb > 0.0 && haa * hbb > hab * hab && info.iter().flatten().all(|v| v.is_finite()) {
            info
        } else {
            [[haa.max(1.0), 0.0], [0.0, hbb.max(1.0)]]
        };
        self.reference = theta;
        Ok(())
    }
}

impl TargetModel for SirModel {
    fn name(&self) -> &str {
        "sir"
    }

    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn log_lik(&self, theta: &ParameterVector) -> f64 {
        self.log_lik_at(theta.continuous[0], theta.continuous[1], theta.discrete[0])
    }

    fn log_prior(&self, theta: &ParameterVector) -> f64 {
        self.prior_at(theta.continuous[0], theta.continuous[1], theta.discrete[0])
    }

    fn initial_theta(&self, _rng: &mut dyn RngCore) -> ParameterVector {
        self.reference.clone()
    }

    fn reference_point(&self) -> ParameterVector {
        self.reference.clone()
    }

    fn proposal_blocks(&self) -> usize {
        2
    }

    fn block_is_tunable(&self, block: usize) -> bool {
        block == 0
    }

    fn propose_theta(&self, theta: &ParameterVector, block: usize, tau: f64, scale: f64, rng: &mut dyn RngCore) -> Proposal {
        match block {
            0 => {
                // joint log-normal step shaped by (tau * info + I)^-1
                let l = self.step_cholesky(tau);
                let (z0, z1) = (std_normal(rng), std_normal(rng));
                let c = scale * 2.4 / std::f64::consts::SQRT_2;
                let step = [c * l[0][0] * z0, c * (l[1][0] * z0 + l[1][1] * z1)];
                let mut next = theta.clone();
                next.continuous[0] *= step[0].exp();
                next.continuous[1] *= step[1].exp();
                Proposal { theta: next, log_hastings: step[0] + step[1] }
            }
            _ => {
                let n = self.data.population;
                let cur = theta.discrete[0];
                let p = cur as f64 / n as f64;
                let next = Binomial::new(n, p).unwrap().sample(rng) as i64;
                let log_h = binomial_ln_pmf(cur as u64, n, next as f64 / n as f64)
                    - binomial_ln_pmf(next as u64, n, p);
                let mut theta = theta.clone();
                theta.discrete[0] = next;
                let mut log_h = log_h;
                if let (Some(from), Some(to)) = (self.ridge_point(cur), self.ridge_point(next)) {
                    for i in 0..2 {
                        let d = to[i] - from[i];
                        theta.continuous[i] *= d.exp();
                        log_h += d;
                    }
                }
                Proposal { theta, log_hastings: log_h }
            }
        }
    }

    fn tau_kernel(&self) -> TauKernel {
        self.tau_kernel
    }

    fn maximize(&self, tau: f64, warm_start: &ParameterVector) -> Result<Optimum> {
        let tau = tau.max(TAU_FLOOR);
        let start = if warm_start.continuous.len() == 2 && warm_start.continuous.iter().all(|v| *v > 0.0 && v.is_finite()) {
            [warm_start.continuous[0].ln(), warm_start.continuous[1].ln()]
        } else {
            [self.reference.continuous[0].ln(), self.reference.continuous[1].ln()]
        };
        let evaluations = std::sync::atomic::AtomicUsize::new(0);
        let best = discrete_line_search(&self.candidates, |k| {
            let m = self.maximize_continuous(tau, k, start)?;
            evaluations.fetch_add(m.evaluations, Ordering::Relaxed);
            Ok(m)
        })?;
        let theta = ParameterVector::new(
            vec![best.continuous.x[0].exp(), best.continuous.x[1].exp()],
            vec![best.discrete],
        );
        Ok(Optimum { theta, evaluations: evaluations.into_inner(), converged: best.continuous.converged })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> SirModel {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, removed) = simulate_chain_binomial(100, 5, 0.1, 0.2 / 100.0, 60, &mut rng);
        let n = removed.len();
        let times = (0..n).map(|t| t as f64).collect();
        let data = SirData::new(100, times, removed, vec![]).unwrap();
        SirModel::with_settings(data, OptimizerSettings::default(), vec![4, 5, 6]).unwrap()
    }

    #[test]
    fn closed_form_without_transmission() {
        let m = toy();
        let traj = m.trajectory(0.3, 0.0, 7).unwrap();
        for (t, s) in m.data().times.iter().zip(&traj) {
            let i = 7.0 * (-0.3 * t).exp();
            assert!((s[1] - i).abs() <= 1e-6 * i.max(1e-300) + 1e-9);
            assert!((s[2] - (7.0 - i)).abs() < 1e-6);
            assert_eq!(s[0], 93.0);
        }
    }

    #[test]
    fn zero_initial_infected_is_absorbing() {
        let m = toy();
        let traj = m.trajectory(0.3, 0.01, 0).unwrap();
        assert!(traj.iter().all(|s| s == &[100.0, 0.0, 0.0]));
        assert!(m.log_lik_at(0.3, 0.01, 0).is_finite());
    }

    #[test]
    fn binomial_kernel_correction() {
        let m = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta = ParameterVector::new(vec![0.1, 0.002], vec![5]);
        for _ in 0..50 {
            let p = m.propose_theta(&theta, 2, 1.0, 1.0, &mut rng);
            let k = p.theta.discrete[0] as u64;
            let fwd = binomial_ln_pmf(k, 100, 0.05);
            let back = binomial_ln_pmf(5, 100, k as f64 / 100.0);
            assert!((p.log_hastings - (back - fwd)).abs() < 1e-12 || (p.log_hastings == f64::NEG_INFINITY && back == f64::NEG_INFINITY));
        }
    }
}
