//! Command-line harness: `run-bimodal`, `run-galaxy`, `run-sir`, `run-pt`
//! and `evidence`.
//!
//! Every run writes `<outdir>/<name>/` containing `summary.json`,
//! `evidence.json`, `traces/*.csv` and `plotdata/*.csv`. Exit codes are 0 on
//! success, 2 for usage or configuration errors and 3 for runtime failures.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::data;
use crate::diagnostics::{mode_occupancy, psrf};
use crate::error::{Error, Result};
use crate::interpolate::{build_interpolator, ProfileInterpolator};
use crate::math::{mean, variance};
use crate::model::{TargetModel, TauKernel};
use crate::models::gmm::GALAXY_PRESETS;
use crate::models::{BimodalMode, BimodalModel, GaussianMixtureModel, SirModel};
use crate::profile::ProfilePrior;
use crate::tempering::{geometric_schedule, run_pt_stwnc, run_standard_pt, Algorithm, SamplerConfig, TraceSet};
use crate::trace::ChainId;

pub use config::{ModelChoice, RunConfig, TauKernelChoice};
use report::{
    evidence_report, fmt, load_runs, validate_run_dir, write_json, write_traces, Metadata, ModelRuns, ModelSummary,
    ReplicateSummary, Summary, Tidy, SUMMARY_SCHEMA,
};

#[derive(Debug, Parser)]
#[command(name = "stwnc", version, about = "Tempering samplers and evidence estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by the run commands. Flags override the config file.
#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// Run directory name under the output directory
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long = "burn-in", visible_alias = "burnin")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub exchange_prob: Option<f64>,
    /// Worker threads for replicates (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(short, long)]
    pub quiet: bool,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GalaxyArgs {
    /// Preset model 1-5
    #[arg(long)]
    pub preset: Option<usize>,
    /// Run all five preset models
    #[arg(long)]
    pub all_presets: bool,
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long, conflicts_with = "unequal_variances")]
    pub equal_variances: bool,
    #[arg(long)]
    pub unequal_variances: bool,
    /// Metropolis-Hastings instead of Gibbs updates at tau = 1
    #[arg(long)]
    pub no_gibbs: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PT-STWNC on the two-component bimodal model
    RunBimodal {
        #[command(flatten)]
        common: Common,
        /// Sample the variance as well as the mean
        #[arg(long)]
        two_parameter: bool,
    },
    /// PT-STWNC on Gaussian mixtures of the Galaxy velocities
    RunGalaxy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        galaxy: GalaxyArgs,
        /// Print the preset models and exit
        #[arg(long)]
        list_presets: bool,
    },
    /// PT-STWNC on the SIR epidemic model
    RunSir {
        #[command(flatten)]
        common: Common,
        /// Evaluate the tau-prior through a prebuilt optimum spline
        #[arg(long)]
        interpolate: bool,
        #[arg(long, value_enum)]
        tau_kernel: Option<TauKernelChoice>,
        /// Shift (alpha, beta) along the posterior ridge with each I(0) move
        #[arg(long)]
        ridge_jumps: bool,
    },
    /// Standard parallel tempering on a geometric schedule
    RunPt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        /// Number of chains (30, 60 and 100 are the usual choices)
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        two_parameter: bool,
        #[command(flatten)]
        galaxy: GalaxyArgs,
    },
    /// Recompute evidence from stored run directories
    Evidence {
        /// Run directories; replicates of the same models are pooled
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Schema(_) => 2,
            _ => 3,
        };
        Self { code, error }
    }
}

fn runtime(error: Error) -> CliError {
    CliError { code: 3, error }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parse `args` (program name first) and execute; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let quiet = match &cli.command {
        Command::RunBimodal { common, .. }
        | Command::RunGalaxy { common, .. }
        | Command::RunSir { common, .. }
        | Command::RunPt { common, .. } => common.quiet,
        Command::Evidence { .. } => true,
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "warn" } else { "info" }))
        .try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.error);
            e.code
        }
    }
}

pub fn execute(command: Command) -> std::result::Result<(), CliError> {
    match command {
        Command::RunGalaxy { list_presets: true, .. } => {
            for (i, (k, eq)) in GALAXY_PRESETS.iter().enumerate() {
                println!("{}. {k} components {} variances", i + 1, if *eq { "equal" } else { "unequal" });
            }
            Ok(())
        }
        Command::Evidence { runs, out } => evidence_command(&runs, out.as_deref()),
        cmd => {
            let (label, mut cfg, jobs) = prepare(&cmd)?;
            let dir = run_experiment(label, &mut cfg, jobs)?;
            println!("{}", dir.display());
            Ok(())
        }
    }
}

fn apply_galaxy(cfg: &mut RunConfig, g: &GalaxyArgs) {
    if g.preset.is_some() {
        cfg.galaxy.preset = g.preset;
    }
    if g.all_presets {
        cfg.galaxy.all_presets = true;
    }
    if let Some(k) = g.components {
        cfg.galaxy.components = k;
        cfg.galaxy.preset = None;
    }
    if g.equal_variances {
        cfg.galaxy.equal_variances = true;
    }
    if g.unequal_variances {
        cfg.galaxy.equal_variances = false;
    }
    if g.no_gibbs {
        cfg.galaxy.gibbs = false;
    }
}

/// Which experiment a command runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Experiment {
    Bimodal,
    Galaxy,
    Sir,
    Pt,
}

impl Experiment {
    fn command(self) -> &'static str {
        match self {
            Experiment::Bimodal => "run-bimodal",
            Experiment::Galaxy => "run-galaxy",
            Experiment::Sir => "run-sir",
            Experiment::Pt => "run-pt",
        }
    }
}

fn prepare(cmd: &Command) -> std::result::Result<(Experiment, RunConfig, Option<usize>), CliError> {
    let common = match cmd {
        Command::RunBimodal { common, .. }
        | Command::RunGalaxy { common, .. }
        | Command::RunSir { common, .. }
        | Command::RunPt { common, .. } => common,
        Command::Evidence { .. } => unreachable!("evidence has no run config"),
    };
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &common.outdir {
        cfg.run.outdir = v.clone();
    }
    if let Some(v) = &common.name {
        cfg.run.name = Some(v.clone());
    }
    if let Some(v) = common.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = common.iterations {
        cfg.run.iterations = Some(v);
    }
    if let Some(v) = common.burn_in {
        cfg.run.burn_in = Some(v);
    }
    if let Some(v) = common.replicates {
        cfg.run.replicates = v;
    }
    if let Some(v) = common.exchange_prob {
        cfg.run.exchange_prob = v;
    }
    let (exp, defaults) = match cmd {
        Command::RunBimodal { two_parameter, .. } => {
            cfg.bimodal.two_parameter |= *two_parameter;
            (Experiment::Bimodal, (50_000, 15_000))
        }
        Command::RunGalaxy { galaxy, .. } => {
            apply_galaxy(&mut cfg, galaxy);
            (Experiment::Galaxy, (35_000, 1_000))
        }
        Command::RunSir { interpolate, tau_kernel, ridge_jumps, .. } => {
            cfg.interpolator.enabled |= *interpolate;
            if let Some(k) = tau_kernel {
                cfg.sir.tau_kernel = *k;
            }
            cfg.sir.ridge_jumps |= *ridge_jumps;
            (Experiment::Sir, (35_000, 3_500))
        }
        Command::RunPt { model, chains, two_parameter, galaxy, .. } => {
            if let Some(m) = model {
                cfg.pt.model = *m;
            }
            if let Some(t) = chains {
                cfg.pt.chains = *t;
                cfg.pt.schedule = None;
            }
            cfg.bimodal.two_parameter |= *two_parameter;
            apply_galaxy(&mut cfg, galaxy);
            (Experiment::Pt, (50_000, 15_000))
        }
        Command::Evidence { .. } => unreachable!(),
    };
    cfg.finalize(defaults.0, defaults.1)?;
    if common.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()).into());
    }
    Ok((exp, cfg, common.jobs))
}

struct Built {
    model: Arc<dyn TargetModel>,
    analytic: Option<f64>,
    interpolator: Option<Arc<ProfileInterpolator>>,
}

fn bimodal_models(cfg: &RunConfig) -> Result<Vec<Built>> {
    let b = &cfg.bimodal;
    let data = match &b.data {
        Some(p) => data::load_values(p)?,
        None => data::bimodal_dataset(b.data_seed, b.n, b.true_mu, b.true_sigma2),
    };
    let mode = if b.two_parameter { BimodalMode::TwoParameter } else { BimodalMode::OneParameter { sigma2: b.sigma2 } };
    let model = BimodalModel::new(data, mode)?.with_optimizer(cfg.optimizer);
    let analytic = if b.two_parameter { None } else { Some(model.analytic_log_evidence()?) };
    Ok(vec![Built { model: Arc::new(model), analytic, interpolator: None }])
}

fn galaxy_models(cfg: &RunConfig) -> Result<Vec<Built>> {
    let g = &cfg.galaxy;
    let data = match &g.data {
        Some(p) => data::load_values(p)?,
        None => data::galaxy_velocities(),
    };
    let specs: Vec<(usize, bool)> = if g.all_presets {
        GALAXY_PRESETS.to_vec()
    } else if let Some(p) = g.preset {
        vec![GALAXY_PRESETS[p - 1]]
    } else {
        vec![(g.components, g.equal_variances)]
    };
    specs
        .into_iter()
        .map(|(k, eq)| {
            let m = GaussianMixtureModel::new(data.clone(), k, eq)?.with_gibbs(g.gibbs).with_optimizer(cfg.optimizer);
            Ok(Built { model: Arc::new(m), analytic: None, interpolator: None })
        })
        .collect()
}

fn sir_model(cfg: &RunConfig) -> Result<SirModel> {
    let s = &cfg.sir;
    let data = match &s.data {
        Some(p) => data::load_outbreak(p, s.population)?,
        None => data::outbreak(),
    };
    let mut m = SirModel::with_settings(data, cfg.optimizer, s.candidates.clone())?;
    if s.tau_kernel == TauKernelChoice::LogWalk {
        if !(s.log_walk_sd > 0.0) {
            return Err(Error::Config("sir.log_walk_sd must be positive".into()));
        }
        m = m.with_tau_kernel(TauKernel::LogRandomWalk(s.log_walk_sd));
    }
    if s.ridge_jumps {
        m = m.with_ridge_jumps()?;
    }
    Ok(m)
}

fn build_models(exp: Experiment, cfg: &RunConfig) -> Result<Vec<Built>> {
    let choice = match exp {
        Experiment::Bimodal => ModelChoice::Bimodal,
        Experiment::Galaxy => ModelChoice::Galaxy,
        Experiment::Sir => ModelChoice::Sir,
        Experiment::Pt => cfg.pt.model,
    };
    match choice {
        ModelChoice::Bimodal => bimodal_models(cfg),
        ModelChoice::Galaxy => galaxy_models(cfg),
        ModelChoice::Sir => {
            let model = sir_model(cfg)?;
            // the manifold is plot data for every SIR run; it drives the sampler only on request
            let interpolator = if exp == Experiment::Sir {
                let t = Instant::now();
                let i = build_interpolator(&model, cfg.interpolator.settings())?;
                log::info!("optimum manifold on {} grid points built in {:.1}s", cfg.interpolator.n_grid, t.elapsed().as_secs_f64());
                Some(Arc::new(i))
            } else {
                None
            };
            Ok(vec![Built { model: Arc::new(model), analytic: None, interpolator }])
        }
    }
}

fn default_name(exp: Experiment, cfg: &RunConfig, models: &[Built]) -> String {
    let base = if models.len() == 1 { models[0].model.name().to_string() } else { "galaxy-presets".to_string() };
    match exp {
        Experiment::Pt => format!("pt-{base}-t{}", cfg.pt.schedule.as_ref().map_or(cfg.pt.chains, Vec::len)),
        Experiment::Sir if cfg.interpolator.enabled => format!("{base}-interpolated"),
        _ => base,
    }
}

/// Target log-posterior after burn-in: the STWNC target chain, or the
/// tau = 1 chain of standard PT.
fn target_log_posterior(run: &TraceSet) -> Vec<f64> {
    let trace = match run.chain(ChainId::Target) {
        Some(t) => t,
        None => &run.chains.last().expect("run has chains").1,
    };
    let lp = trace.log_posterior();
    trace.post_burn_in(&lp).to_vec()
}

fn convergence(runs: &[TraceSet]) -> (Option<f64>, String) {
    let series: Vec<Vec<f64>> = runs.iter().map(target_log_posterior).collect();
    if series.len() >= 2 {
        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        (psrf(&refs).ok(), "replicates".into())
    } else {
        let s = &series[0];
        let h = s.len() / 2;
        (psrf(&[&s[..h], &s[h..2 * h]]).ok(), "split-chain".into())
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    for sub in ["traces", "plotdata"] {
        let p = dir.join(sub);
        if p.exists() {
            std::fs::remove_dir_all(&p)?;
        }
        std::fs::create_dir_all(&p)?;
    }
    Ok(())
}

fn run_experiment(exp: Experiment, cfg: &mut RunConfig, jobs: Option<usize>) -> std::result::Result<PathBuf, CliError> {
    let start = Instant::now();
    let models = build_models(exp, cfg)?;
    if cfg.run.name.is_none() {
        cfg.run.name = Some(default_name(exp, cfg, &models));
    }
    let dir = cfg.run.outdir.join(cfg.run.name.as_ref().unwrap());
    prepare_dir(&dir).map_err(runtime)?;

    let sampler = SamplerConfig {
        iterations: cfg.iterations(),
        burn_in: cfg.burn_in(),
        exchange_prob: cfg.run.exchange_prob,
        initial_tau: 1.0,
        adapt: cfg.run.adapt,
    };
    let schedule = match &cfg.pt.schedule {
        Some(s) => s.clone(),
        None => geometric_schedule(cfg.pt.chains)?,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| runtime(Error::Config(e.to_string())))?;

    let seed = cfg.run.seed;
    let replicates = cfg.run.replicates;
    let mut all: Vec<ModelRuns> = Vec::with_capacity(models.len());
    for b in &models {
        log::info!("{}: {} replicate(s) of {} iterations", b.model.name(), replicates, sampler.iterations);
        let runs: Vec<Result<TraceSet>> = pool.install(|| {
            (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let stream = r as u64;
                    if exp == Experiment::Pt {
                        run_standard_pt(b.model.as_ref(), &schedule, &sampler, seed, stream)
                    } else {
                        let prior = match (&b.interpolator, cfg.interpolator.enabled) {
                            (Some(i), true) => ProfilePrior::Interpolated(Arc::clone(i)),
                            _ => ProfilePrior::optimized(),
                        };
                        run_pt_stwnc(b.model.as_ref(), prior, &sampler, seed, stream)
                    }
                })
                .collect()
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>().map_err(runtime)?;
        all.push(ModelRuns { model: b.model.name().to_string(), analytic: b.analytic, runs });
    }

    let mut summaries = Vec::with_capacity(all.len());
    for (b, mr) in models.iter().zip(&all) {
        let mut reps = Vec::with_capacity(mr.runs.len());
        for (i, run) in mr.runs.iter().enumerate() {
            let traces = write_traces(&dir, &mr.model, i, run).map_err(runtime)?;
            reps.push(ReplicateSummary {
                replicate: i,
                stream: i as u64,
                algorithm: run.algorithm.clone(),
                stats: run.stats.clone(),
                traces,
            });
        }
        let (psrf_value, basis) = convergence(&mr.runs);
        if let Some(r) = psrf_value {
            log::info!("{}: R-hat of target log-posterior {r:.4} ({basis})", mr.model);
        }
        summaries.push(ModelSummary {
            model: mr.model.clone(),
            param_names: b.model.layout().names(),
            n_continuous: b.model.layout().continuous.len(),
            analytic_log_evidence: b.analytic,
            psrf_log_posterior: psrf_value,
            psrf_basis: basis,
            replicates: reps,
        });
    }

    let report = evidence_report(&all).map_err(runtime)?;
    write_json(&dir.join("evidence.json"), &report).map_err(runtime)?;
    write_plot_data(&dir, exp, &models, &all).map_err(runtime)?;
    let summary = Summary {
        schema: SUMMARY_SCHEMA.into(),
        command: exp.command().into(),
        config: cfg.clone(),
        models: summaries,
        metadata: Metadata {
            created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    };
    write_json(&dir.join("summary.json"), &summary).map_err(runtime)?;
    validate_run_dir(&dir).map_err(|e| runtime(Error::Schema(format!("output validation failed: {e}"))))?;
    for m in &report.models {
        for e in &m.combined {
            log::info!("{}: {} = {:.4}", m.model, e.method.label(), e.log_ml);
        }
    }
    Ok(dir)
}

fn write_plot_data(dir: &Path, exp: Experiment, models: &[Built], all: &[ModelRuns]) -> Result<()> {
    let pd = dir.join("plotdata");
    if exp == Experiment::Pt {
        let mut t = Tidy::create(&pd.join("chain_means.csv"), &["model", "replicate", "chain", "tau", "mean_log_lik", "var_log_lik"])?;
        for mr in all {
            for (r, run) in mr.runs.iter().enumerate() {
                let Algorithm::StandardPt { schedule } = &run.algorithm else { continue };
                for ((id, tr), tau) in run.chains.iter().zip(schedule) {
                    let s = tr.post_burn_in(&tr.log_lik);
                    let v = if s.len() > 1 { variance(s) } else { 0.0 };
                    t.row([mr.model.clone(), r.to_string(), id.label(), fmt(*tau), fmt(mean(s)), fmt(v)])?;
                }
            }
        }
        return t.finish();
    }

    // (tau, log-likelihood) pairs of the tempered chain: the TI integrand
    let mut t = Tidy::create(&pd.join("tau_loglik.csv"), &["model", "replicate", "tau", "log_lik"])?;
    for mr in all {
        for (r, run) in mr.runs.iter().enumerate() {
            let tr = run.chain(ChainId::Tempered).ok_or_else(|| Error::Schema("missing tempered chain".into()))?;
            let s = tr.analysis_start();
            for i in s..tr.len() {
                t.row([mr.model.clone(), r.to_string(), fmt(tr.tau[i]), fmt(tr.log_lik[i])])?;
            }
        }
    }
    t.finish()?;

    if exp != Experiment::Sir {
        return Ok(());
    }
    let mut occ = Tidy::create(&pd.join("i0_occupancy.csv"), &["model", "replicate", "chain", "i0", "share"])?;
    let mut ab = Tidy::create(&pd.join("alpha_beta.csv"), &["replicate", "chain", "iteration", "tau", "alpha", "beta", "i0"])?;
    for mr in all {
        for (r, run) in mr.runs.iter().enumerate() {
            for (id, tr) in &run.chains {
                let (a, b, k) = (tr.param("alpha").unwrap(), tr.param("beta").unwrap(), tr.param("i0").unwrap());
                for (i0, share) in mode_occupancy(tr.post_burn_in(k), |&v| v as i64) {
                    occ.row([mr.model.clone(), r.to_string(), id.label(), i0.to_string(), fmt(share)])?;
                }
                for i in tr.analysis_start()..tr.len() {
                    ab.row([
                        r.to_string(),
                        id.label(),
                        tr.iteration[i].to_string(),
                        fmt(tr.tau[i]),
                        fmt(a[i]),
                        fmt(b[i]),
                        (k[i] as i64).to_string(),
                    ])?;
                }
            }
        }
    }
    occ.finish()?;
    ab.finish()?;
    if let Some(interp) = models.first().and_then(|b| b.interpolator.as_ref()) {
        let mut m = Tidy::create(&pd.join("manifold.csv"), &["log10_tau", "tau", "alpha", "beta", "i0"])?;
        for (tau, theta) in interp.grid() {
            m.row([
                fmt(tau.log10()),
                fmt(tau),
                fmt(theta.continuous[0]),
                fmt(theta.continuous[1]),
                theta.discrete[0].to_string(),
            ])?;
        }
        m.finish()?;
    }
    Ok(())
}

fn evidence_command(dirs: &[PathBuf], out: Option<&Path>) -> std::result::Result<(), CliError> {
    let mut merged: Vec<ModelRuns> = Vec::new();
    for d in dirs {
        let (_, models) = load_runs(d)?;
        if merged.is_empty() {
            merged = models;
            continue;
        }
        let names = |v: &[ModelRuns]| v.iter().map(|m| m.model.clone()).collect::<Vec<_>>();
        if names(&merged) != names(&models) {
            return Err(Error::Schema(format!(
                "{} holds models {:?}, expected {:?}",
                d.display(),
                names(&models),
                names(&merged)
            ))
            .into());
        }
        for (m, extra) in merged.iter_mut().zip(models) {
            if extra.runs.first().map(|r| &r.algorithm) != m.runs.first().map(|r| &r.algorithm) {
                return Err(Error::Schema(format!(
                    "{}: {} was sampled with a different algorithm or schedule",
                    d.display(),
                    m.model
                ))
                .into());
            }
            m.runs.extend(extra.runs);
        }
    }
    let report = evidence_report(&merged)?;
    match out {
        Some(p) => write_json(p, &report).map_err(runtime)?,
        None => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| runtime(e.into()))?;
            s.push('\n');
            std::io::stdout().write_all(s.as_bytes()).map_err(|e| runtime(e.into()))?;
        }
    }
    Ok(())
}
