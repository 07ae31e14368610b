//! Run configuration: TOML file sections plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolate::InterpolatorSettings;
use crate::optimize::OptimizerSettings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Output subdirectory name; derived from the command and model when absent.
    pub name: Option<String>,
    pub seed: u64,
    pub replicates: usize,
    /// Defaults depend on the subcommand.
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub exchange_prob: f64,
    pub adapt: bool,
    pub outdir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: None,
            seed: 1,
            replicates: 1,
            iterations: None,
            burn_in: None,
            exchange_prob: 0.5,
            adapt: true,
            outdir: PathBuf::from("runs"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BimodalSection {
    pub two_parameter: bool,
    /// Known variance in the one-parameter model.
    pub sigma2: f64,
    /// Simulated data: size, generating mean and variance, and seed.
    pub n: usize,
    pub true_mu: f64,
    pub true_sigma2: f64,
    pub data_seed: u64,
    /// Read observations from a one-column CSV instead of simulating.
    pub data: Option<PathBuf>,
}

impl Default for BimodalSection {
    fn default() -> Self {
        Self { two_parameter: false, sigma2: 1.0, n: 25, true_mu: 1.5, true_sigma2: 1.0, data_seed: 1, data: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalaxySection {
    /// 1-based index into the five preset models; overrides `components`.
    pub preset: Option<usize>,
    pub all_presets: bool,
    pub components: usize,
    pub equal_variances: bool,
    pub gibbs: bool,
    pub data: Option<PathBuf>,
}

impl Default for GalaxySection {
    fn default() -> Self {
        Self { preset: None, all_presets: false, components: 3, equal_variances: false, gibbs: true, data: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TauKernelChoice {
    TruncatedNormal,
    LogWalk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirSection {
    pub population: u64,
    /// time,count CSV; the bundled outbreak when absent.
    pub data: Option<PathBuf>,
    pub candidates: Vec<i64>,
    pub tau_kernel: TauKernelChoice,
    pub log_walk_sd: f64,
    pub ridge_jumps: bool,
}

impl Default for SirSection {
    fn default() -> Self {
        Self {
            population: crate::data::OUTBREAK_POPULATION,
            data: None,
            candidates: (1..=8).collect(),
            tau_kernel: TauKernelChoice::TruncatedNormal,
            log_walk_sd: 1.0,
            ridge_jumps: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Bimodal,
    Galaxy,
    Sir,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PtSection {
    pub model: ModelChoice,
    pub chains: usize,
    /// Explicit schedule; replaces the geometric one built from `chains`.
    pub schedule: Option<Vec<f64>>,
}

impl Default for PtSection {
    fn default() -> Self {
        Self { model: ModelChoice::Bimodal, chains: 30, schedule: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolatorSection {
    pub enabled: bool,
    pub n_grid: usize,
    pub n_knots: usize,
}

impl Default for InterpolatorSection {
    fn default() -> Self {
        let d = InterpolatorSettings::default();
        Self { enabled: false, n_grid: d.n_grid, n_knots: d.n_knots }
    }
}

impl InterpolatorSection {
    pub fn settings(&self) -> InterpolatorSettings {
        InterpolatorSettings { n_grid: self.n_grid, n_knots: self.n_knots }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub optimizer: OptimizerSettings,
    pub interpolator: InterpolatorSection,
    pub bimodal: BimodalSection,
    pub galaxy: GalaxySection,
    pub sir: SirSection,
    pub pt: PtSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fill iteration defaults for a command and check consistency.
    pub fn finalize(&mut self, default_iterations: usize, default_burn_in: usize) -> Result<()> {
        let it = *self.run.iterations.get_or_insert(default_iterations);
        // an unspecified burn-in keeps the default fraction of the run
        let scaled = (default_burn_in as u128 * it as u128 / default_iterations.max(1) as u128) as usize;
        let burn = *self.run.burn_in.get_or_insert(scaled);
        let bad = |m: String| Err(Error::Config(m));
        if it == 0 || burn >= it {
            return bad(format!("iterations ({it}) must exceed burn-in ({burn})"));
        }
        if self.run.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.run.exchange_prob) {
            return bad("exchange_prob must lie in [0, 1]".into());
        }
        if self.pt.chains == 0 {
            return bad("pt.chains must be at least 1".into());
        }
        if let Some(p) = self.galaxy.preset {
            if !(1..=5).contains(&p) {
                return bad(format!("galaxy preset {p} is not in 1..=5"));
            }
        }
        if self.galaxy.components == 0 {
            return bad("galaxy.components must be at least 1".into());
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.run.iterations.unwrap_or(0)
    }

    pub fn burn_in(&self) -> usize {
        self.run.burn_in.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_are_optional() {
        let c = RunConfig::from_toml("[run]\nseed = 7\n[optimizer]\ntolerance = 1e-4\n").unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.optimizer.tolerance, 1e-4);
        assert_eq!(c.optimizer.max_iterations, OptimizerSettings::default().max_iterations);
        assert_eq!(c.pt.chains, 30);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("[run]\nseeed = 7\n"), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.interpolator.enabled = true;
        c.sir.tau_kernel = TauKernelChoice::LogWalk;
        c.finalize(100, 10).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn burn_in_must_be_shorter_than_run() {
        let mut c = RunConfig::default();
        c.run.iterations = Some(10);
        c.run.burn_in = Some(10);
        assert!(c.finalize(100, 10).is_err());
        let mut c = RunConfig::default();
        c.run.replicates = 0;
        assert!(c.finalize(100, 10).is_err());
    }
}
