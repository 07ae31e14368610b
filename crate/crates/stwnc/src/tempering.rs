//! Tempered densities, the STWNC transitions, the two-chain PT-STWNC hybrid and
//! classical parallel tempering.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{combine, TargetModel};
use crate::params::{InverseTemperature, ParameterVector};
use crate::profile::ProfilePrior;
use crate::trace::{ChainId, ChainTrace, TraceRecord};

pub use crate::model::tempered_log_posterior;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: ParameterVector,
    pub tau: InverseTemperature,
    pub log_lik: f64,
    pub log_prior: f64,
}

impl ChainState {
    pub fn new(model: &dyn TargetModel, theta: ParameterVector, tau: InverseTemperature) -> Self {
        let log_prior = model.log_prior(&theta);
        let log_lik = if log_prior.is_finite() { model.log_lik(&theta) } else { f64::NEG_INFINITY };
        Self { theta, tau, log_lik, log_prior }
    }

    pub fn log_posterior(&self) -> f64 {
        combine(self.tau.value(), self.log_lik, self.log_prior)
    }

    /// Cached values agree with a fresh evaluation to `tol`.
    pub fn is_coherent(&self, model: &dyn TargetModel, tol: f64) -> bool {
        let close = |a: f64, b: f64| a == b || (a - b).abs() <= tol * (1.0 + a.abs());
        close(self.log_prior, model.log_prior(&self.theta)) && close(self.log_lik, model.log_lik(&self.theta))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub tempered: ChainState,
    pub target: ChainState,
}

/// Per-block step-size multipliers in half-decade bins of log10(tau),
/// adapted toward a target acceptance rate while `adapting` is set.
#[derive(Clone, Debug)]
pub struct ProposalTuning {
    blocks: usize,
    log_scale: Vec<f64>,
    updates: Vec<u64>,
    pub adapting: bool,
    pub target_acceptance: f64,
    pub attempts: Vec<u64>,
    pub accepts: Vec<u64>,
}

const TUNING_BINS: usize = 30;

impl ProposalTuning {
    pub fn new(blocks: usize) -> Self {
        Self {
            blocks,
            log_scale: vec![0.0; blocks * TUNING_BINS],
            updates: vec![0; blocks * TUNING_BINS],
            adapting: true,
            target_acceptance: 0.44,
            attempts: vec![0; blocks],
            accepts: vec![0; blocks],
        }
    }

    fn bin(tau: f64) -> usize {
        if tau <= 1e-15 {
            return 0;
        }
        (((tau.log10() + 15.0) / 0.5).floor().max(0.0) as usize).min(TUNING_BINS - 1)
    }

    pub fn scale(&self, block: usize, tau: f64) -> f64 {
        self.log_scale[Self::bin(tau) * self.blocks + block].exp()
    }

    pub fn record(&mut self, block: usize, tau: f64, accepted: bool) {
        self.attempts[block] += 1;
        self.accepts[block] += u64::from(accepted);
        if self.adapting {
            let i = Self::bin(tau) * self.blocks + block;
            self.updates[i] += 1;
            let gain = 1.0 / (self.updates[i] as f64).powf(0.6);
            let a = if accepted { 1.0 } else { 0.0 };
            self.log_scale[i] = (self.log_scale[i] + gain * (a - self.target_acceptance)).clamp(-12.0, 5.0);
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        let a: u64 = self.attempts.iter().sum();
        if a == 0 {
            return 0.0;
        }
        self.accepts.iter().sum::<u64>() as f64 / a as f64
    }
}

/// Metropolis–Hastings acceptance in log space.
fn accept(log_ratio: f64, rng: &mut dyn RngCore) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    rng.random::<f64>().ln() < log_ratio
}

/// Log acceptance ratio of a theta move at fixed tau.
pub fn theta_log_ratio(tau: f64, current: (f64, f64), proposed: (f64, f64), log_hastings: f64) -> f64 {
    let new = combine(tau, proposed.0, proposed.1);
    if new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    new - combine(tau, current.0, current.1) + log_hastings
}

/// One Metropolis–Hastings sweep over the model's blocks at the state's tau.
/// Returns whether any block moved.
pub fn stwnc_theta_step(
    model: &dyn TargetModel,
    state: &mut ChainState,
    tuning: &mut ProposalTuning,
    rng: &mut dyn RngCore,
) -> bool {
    let tau = state.tau.value();
    let layout = model.layout();
    let mut any = false;
    for block in 0..model.proposal_blocks() {
        let scale = if model.block_is_tunable(block) { tuning.scale(block, tau) } else { 1.0 };
        let prop = model.propose_theta(&state.theta, block, tau, scale, rng);
        let mut ok = false;
        if layout.contains(&prop.theta) && prop.log_hastings != f64::NEG_INFINITY {
            let lp = model.log_prior(&prop.theta);
            if lp.is_finite() {
                let ll = model.log_lik(&prop.theta);
                let r = theta_log_ratio(tau, (state.log_lik, state.log_prior), (ll, lp), prop.log_hastings);
                if accept(r, rng) {
                    state.theta = prop.theta;
                    state.log_lik = ll;
                    state.log_prior = lp;
                    ok = true;
                }
            }
        }
        if model.block_is_tunable(block) {
            tuning.record(block, tau, ok);
        } else {
            tuning.attempts[block] += 1;
            tuning.accepts[block] += u64::from(ok);
        }
        any |= ok;
    }
    any
}

/// Gibbs sweep if the model offers one at this tau, otherwise an MH sweep.
pub fn mutate(model: &dyn TargetModel, state: &mut ChainState, tuning: &mut ProposalTuning, rng: &mut dyn RngCore) -> bool {
    if let Some(theta) = model.gibbs_sweep(&state.theta, state.tau.value(), rng) {
        *state = ChainState::new(model, theta, state.tau);
        return true;
    }
    stwnc_theta_step(model, state, tuning, rng)
}

/// Log acceptance ratio of a tau move with the profile prior:
/// `(tau* - tau) log L(theta) + log P(tau*) - log P(tau) + log q-correction`.
pub fn tau_log_ratio(log_lik: f64, tau: f64, tau_new: f64, log_prior_tau: f64, log_prior_tau_new: f64, log_hastings: f64) -> f64 {
    let lik_term = if tau_new == tau { 0.0 } else { (tau_new - tau) * log_lik };
    lik_term + (log_prior_tau_new - log_prior_tau) + log_hastings
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauStepOutcome {
    Accepted,
    Rejected,
    OptimizerFailure,
}

/// Tau move of the tempered chain; theta is unchanged.
pub fn stwnc_tau_step(
    model: &dyn TargetModel,
    state: &mut ChainState,
    prior: &mut ProfilePrior,
    rng: &mut dyn RngCore,
) -> TauStepOutcome {
    let tau = state.tau.value();
    let prop = model.propose_tau(tau, rng);
    let Ok(lp_cur) = prior.log_density(model, tau) else {
        return TauStepOutcome::OptimizerFailure;
    };
    let lp_new = match prior.log_density(model, prop.tau) {
        Ok(v) => v,
        Err(e) => {
            log::debug!("tau proposal {} rejected: {e}", prop.tau);
            return TauStepOutcome::OptimizerFailure;
        }
    };
    let r = tau_log_ratio(state.log_lik, tau, prop.tau, lp_cur, lp_new, prop.log_hastings);
    if accept(r, rng) {
        state.tau = InverseTemperature::new(prop.tau).expect("tau kernel stays in [0, 1]");
        TauStepOutcome::Accepted
    } else {
        TauStepOutcome::Rejected
    }
}

/// Log acceptance ratio of swapping theta between the tempered chain and the target chain.
pub fn exchange_log_ratio(tau_tempered: f64, log_lik_tempered: f64, log_lik_target: f64) -> f64 {
    if tau_tempered == 1.0 || log_lik_target == log_lik_tempered {
        return 0.0;
    }
    (tau_tempered - 1.0) * (log_lik_target - log_lik_tempered)
}

/// Propose swapping theta between the two chains; taus never move.
pub fn pt_exchange_step(pair: &mut PairState, rng: &mut dyn RngCore) -> bool {
    debug_assert_eq!(pair.target.tau.value(), 1.0);
    let r = exchange_log_ratio(pair.tempered.tau.value(), pair.tempered.log_lik, pair.target.log_lik);
    if accept(r, rng) {
        swap_theta(&mut pair.tempered, &mut pair.target);
        true
    } else {
        false
    }
}

fn swap_theta(a: &mut ChainState, b: &mut ChainState) {
    std::mem::swap(&mut a.theta, &mut b.theta);
    std::mem::swap(&mut a.log_lik, &mut b.log_lik);
    std::mem::swap(&mut a.log_prior, &mut b.log_prior);
}

/// tau_i = (i / T)^5 for i = 1..T.
pub fn geometric_schedule(t: usize) -> Result<Vec<f64>> {
    if t < 1 {
        return Err(invalid("schedule needs at least one temperature"));
    }
    Ok((1..=t).map(|i| if i == t { 1.0 } else { (i as f64 / t as f64).powi(5) }).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub exchange_prob: f64,
    pub initial_tau: f64,
    pub adapt: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { iterations: 50_000, burn_in: 15_000, exchange_prob: 0.5, initial_tau: 1.0, adapt: true }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.iterations {
            return Err(invalid("burn-in exceeds the number of iterations"));
        }
        if !(0.0..=1.0).contains(&self.exchange_prob) {
            return Err(invalid("exchange probability must lie in [0, 1]"));
        }
        InverseTemperature::new(self.initial_tau)?;
        Ok(())
    }
}

/// Independent RNG stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub iterations: usize,
    pub burn_in: usize,
    pub exchange_attempts: Vec<u64>,
    pub exchange_accepts: Vec<u64>,
    pub theta_acceptance: Vec<f64>,
    pub tau_attempts: u64,
    pub tau_accepts: u64,
    pub optimizer_failures: u64,
    /// Optimizer evaluations per fresh optimization, averaged over thirds of the run.
    pub optimizer_evaluations_by_third: Vec<f64>,
    pub optimizer_calls: usize,
    pub cache_entries: usize,
    pub interpolator_clamps: u64,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    PtStwnc,
    StandardPt { schedule: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct TraceSet {
    pub model: String,
    pub algorithm: Algorithm,
    pub chains: Vec<(ChainId, ChainTrace)>,
    pub stats: RunStats,
}

impl TraceSet {
    pub fn chain(&self, id: ChainId) -> Option<&ChainTrace> {
        self.chains.iter().find(|(c, _)| *c == id).map(|(_, t)| t)
    }
}

fn record(id: ChainId, iteration: usize, burn_in: bool, s: &ChainState, acc_theta: bool, acc_tau: bool, exchanged: bool) -> TraceRecord {
    TraceRecord {
        iteration: iteration as u64,
        chain_id: id,
        theta: s.theta.clone(),
        tau: s.tau.value(),
        log_lik: s.log_lik,
        log_prior: s.log_prior,
        accepted_theta: acc_theta,
        accepted_tau: acc_tau,
        exchanged,
        burn_in,
    }
}

fn thirds(evals: &[usize]) -> Vec<f64> {
    if evals.len() < 3 {
        return Vec::new();
    }
    let n = evals.len();
    (0..3)
        .map(|i| {
            let s = &evals[i * n / 3..(i + 1) * n / 3];
            s.iter().sum::<usize>() as f64 / s.len() as f64
        })
        .collect()
}

/// What happened in one PT-STWNC iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterationOutcome {
    pub exchange_attempted: bool,
    pub exchanged: bool,
    pub tempered_theta_moved: bool,
    pub target_theta_moved: bool,
    pub tau: Option<TauStepOutcome>,
}

/// Two-chain sampler: an STWNC chain with free tau and a target chain at tau = 1.
pub struct PtStwnc<'m> {
    model: &'m dyn TargetModel,
    pub pair: PairState,
    pub prior: ProfilePrior,
    pub tempered_tuning: ProposalTuning,
    pub target_tuning: ProposalTuning,
    pub exchange_prob: f64,
    pub tau_attempts: u64,
    pub tau_accepts: u64,
    pub optimizer_failures: u64,
    pub exchange_attempts: u64,
    pub exchange_accepts: u64,
}

impl<'m> PtStwnc<'m> {
    pub fn new(model: &'m dyn TargetModel, prior: ProfilePrior, exchange_prob: f64, initial_tau: f64, rng: &mut dyn RngCore) -> Result<Self> {
        let tau = InverseTemperature::new(initial_tau)?;
        let t0 = model.initial_theta(rng);
        let t1 = model.initial_theta(rng);
        let blocks = model.proposal_blocks();
        Ok(Self {
            model,
            pair: PairState {
                tempered: ChainState::new(model, t0, tau),
                target: ChainState::new(model, t1, InverseTemperature::ONE),
            },
            prior,
            tempered_tuning: ProposalTuning::new(blocks),
            target_tuning: ProposalTuning::new(blocks),
            exchange_prob,
            tau_attempts: 0,
            tau_accepts: 0,
            optimizer_failures: 0,
            exchange_attempts: 0,
            exchange_accepts: 0,
        })
    }

    pub fn set_adapting(&mut self, on: bool) {
        self.tempered_tuning.adapting = on;
        self.target_tuning.adapting = on;
    }

    /// With probability `exchange_prob` an exchange, otherwise a theta sweep and
    /// a tau move on the tempered chain and a sweep on the target chain.
    pub fn iterate(&mut self, rng: &mut dyn RngCore) -> IterationOutcome {
        let model = self.model;
        if rng.random::<f64>() < self.exchange_prob {
            self.exchange_attempts += 1;
            let ex = pt_exchange_step(&mut self.pair, rng);
            self.exchange_accepts += u64::from(ex);
            return IterationOutcome { exchange_attempted: true, exchanged: ex, tempered_theta_moved: false, target_theta_moved: false, tau: None };
        }
        let moved = stwnc_theta_step(model, &mut self.pair.tempered, &mut self.tempered_tuning, rng);
        let tau = stwnc_tau_step(model, &mut self.pair.tempered, &mut self.prior, rng);
        self.tau_attempts += 1;
        match tau {
            TauStepOutcome::Accepted => self.tau_accepts += 1,
            TauStepOutcome::OptimizerFailure => self.optimizer_failures += 1,
            TauStepOutcome::Rejected => {}
        }
        let target_moved = mutate(model, &mut self.pair.target, &mut self.target_tuning, rng);
        IterationOutcome { exchange_attempted: false, exchanged: false, tempered_theta_moved: moved, target_theta_moved: target_moved, tau: Some(tau) }
    }
}

/// Run PT-STWNC and record both chains at every iteration.
pub fn run_pt_stwnc(model: &dyn TargetModel, prior: ProfilePrior, config: &SamplerConfig, seed: u64, stream: u64) -> Result<TraceSet> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = stream_rng(seed, stream);
    let mut sampler = PtStwnc::new(model, prior, config.exchange_prob, config.initial_tau, &mut rng)?;
    let names = model.layout().names();
    let nc = model.layout().continuous.len();
    let mut tempered = ChainTrace::with_capacity(names.clone(), nc, config.iterations);
    let mut target = ChainTrace::with_capacity(names, nc, config.iterations);
    for it in 0..config.iterations {
        let burn = it < config.burn_in;
        sampler.set_adapting(config.adapt && burn);
        let o = sampler.iterate(&mut rng);
        let acc_tau = o.tau == Some(TauStepOutcome::Accepted);
        tempered.push(&record(ChainId::Tempered, it, burn, &sampler.pair.tempered, o.tempered_theta_moved, acc_tau, o.exchanged));
        target.push(&record(ChainId::Target, it, burn, &sampler.pair.target, o.target_theta_moved, false, o.exchanged));
    }
    let (evals, entries, clamps) = match &sampler.prior {
        ProfilePrior::Optimized(c) => (c.evaluation_log().to_vec(), c.len(), 0),
        ProfilePrior::Interpolated(i) => (Vec::new(), 0, i.clamped_queries()),
    };
    let stats = RunStats {
        iterations: config.iterations,
        burn_in: config.burn_in,
        exchange_attempts: vec![sampler.exchange_attempts],
        exchange_accepts: vec![sampler.exchange_accepts],
        theta_acceptance: vec![sampler.tempered_tuning.acceptance_rate(), sampler.target_tuning.acceptance_rate()],
        tau_attempts: sampler.tau_attempts,
        tau_accepts: sampler.tau_accepts,
        optimizer_failures: sampler.optimizer_failures,
        optimizer_evaluations_by_third: thirds(&evals),
        optimizer_calls: evals.len(),
        cache_entries: entries,
        interpolator_clamps: clamps,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TraceSet {
        model: model.name().to_string(),
        algorithm: Algorithm::PtStwnc,
        chains: vec![(ChainId::Tempered, tempered), (ChainId::Target, target)],
        stats,
    })
}

/// Log acceptance ratio of swapping the states of chains at `tau_a` and `tau_b`.
pub fn pt_swap_log_ratio(tau_a: f64, log_lik_a: f64, tau_b: f64, log_lik_b: f64) -> f64 {
    if tau_a == tau_b || log_lik_a == log_lik_b {
        return 0.0;
    }
    (tau_b - tau_a) * (log_lik_a - log_lik_b)
}

/// Classical parallel tempering on a fixed schedule.
pub fn run_standard_pt(model: &dyn TargetModel, schedule: &[f64], config: &SamplerConfig, seed: u64, stream: u64) -> Result<TraceSet> {
    config.validate()?;
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) || *schedule.last().unwrap() != 1.0 || schedule[0] < 0.0 {
        return Err(invalid("schedule must be strictly increasing in [0, 1] and end at 1"));
    }
    let start = Instant::now();
    let mut rng = stream_rng(seed, stream);
    let t = schedule.len();
    let mut states: Vec<ChainState> = schedule
        .iter()
        .map(|&tau| {
            let theta = model.initial_theta(&mut rng);
            ChainState::new(model, theta, InverseTemperature::new(tau).unwrap())
        })
        .collect();
    let mut tunings = vec![ProposalTuning::new(model.proposal_blocks()); t];
    let names = model.layout().names();
    let nc = model.layout().continuous.len();
    let mut traces: Vec<ChainTrace> = (0..t).map(|_| ChainTrace::with_capacity(names.clone(), nc, config.iterations)).collect();
    let mut ex_attempts = vec![0u64; t.saturating_sub(1)];
    let mut ex_accepts = vec![0u64; t.saturating_sub(1)];
    let mut moved = vec![false; t];
    let mut swapped = vec![false; t];
    for it in 0..config.iterations {
        let burn = it < config.burn_in;
        moved.iter_mut().for_each(|m| *m = false);
        swapped.iter_mut().for_each(|m| *m = false);
        if t > 1 && rng.random::<f64>() < config.exchange_prob {
            let j = rng.random_range(0..t - 1);
            ex_attempts[j] += 1;
            let r = pt_swap_log_ratio(schedule[j], states[j].log_lik, schedule[j + 1], states[j + 1].log_lik);
            if accept(r, &mut rng) {
                let (lo, hi) = states.split_at_mut(j + 1);
                swap_theta(&mut lo[j], &mut hi[0]);
                ex_accepts[j] += 1;
                swapped[j] = true;
                swapped[j + 1] = true;
            }
        } else {
            for (i, (s, tu)) in states.iter_mut().zip(tunings.iter_mut()).enumerate() {
                tu.adapting = config.adapt && burn;
                moved[i] = mutate(model, s, tu, &mut rng);
            }
        }
        for (i, s) in states.iter().enumerate() {
            traces[i].push(&record(ChainId::Pt(i), it, burn, s, moved[i], false, swapped[i]));
        }
    }
    let stats = RunStats {
        iterations: config.iterations,
        burn_in: config.burn_in,
        exchange_attempts: ex_attempts,
        exchange_accepts: ex_accepts,
        theta_acceptance: tunings.iter().map(|tu| tu.acceptance_rate()).collect(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        ..RunStats::default()
    };
    Ok(TraceSet {
        model: model.name().to_string(),
        algorithm: Algorithm::StandardPt { schedule: schedule.to_vec() },
        chains: traces.into_iter().enumerate().map(|(i, tr)| (ChainId::Pt(i), tr)).collect(),
        stats,
    })
}
