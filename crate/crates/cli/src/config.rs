//! Experiment configuration files.

use std::path::{Path, PathBuf};

use chaotic_rl::env::EnvConfig;
use chaotic_rl::estimator::{DistributionalConfig, EstimatorMode};
use chaotic_rl::mdp::TabularMdp;
use chaotic_rl::pg::{ActorCriticConfig, PgAlgorithm, PgConfig, SharpeMode, TimescaleSchedule};
use chaotic_rl::value::{LearningSchedule, RLearningSchedule, StepSize};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_at, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    CmvQ,
    CmvR,
    CmvReinforce,
    MvReinforce,
    Sharpe,
    Cvar,
    ActorCritic,
}

impl AlgorithmName {
    pub fn is_value_based(self) -> bool {
        matches!(self, Self::CmvQ | Self::CmvR)
    }
}

/// Monte-Carlo policy-gradient settings shared by the batch methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgSettings {
    pub batch_size: usize,
    pub iterations: u64,
    pub schedule: TimescaleSchedule,
    pub estimator: EstimatorMode,
    pub distributional: DistributionalConfig,
    pub max_episode_steps: usize,
    pub sharpe_mode: SharpeMode,
    pub sharpe_floor: f64,
    pub cvar_level: f64,
    pub cvar_initial_var: f64,
}

impl Default for PgSettings {
    fn default() -> Self {
        let base = PgConfig::default();
        Self {
            batch_size: base.batch_size,
            iterations: base.iterations,
            schedule: base.schedule,
            estimator: base.estimator,
            distributional: base.distributional,
            max_episode_steps: base.max_episode_steps,
            sharpe_mode: SharpeMode::Recentered,
            sharpe_floor: 1e-8,
            cvar_level: 0.9,
            cvar_initial_var: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub name: AlgorithmName,
    #[serde(default)]
    pub learning: LearningSchedule,
    #[serde(default)]
    pub r_learning: RLearningSchedule,
    #[serde(default)]
    pub pg: PgSettings,
    #[serde(default)]
    pub actor_critic: ActorCriticConfig,
}

impl AlgorithmConfig {
    /// Policy-gradient trainer settings, when the algorithm is a batch method.
    pub fn pg_config(&self) -> Option<PgConfig> {
        let p = &self.pg;
        let algorithm = match self.name {
            AlgorithmName::CmvReinforce => PgAlgorithm::CmvReinforce,
            AlgorithmName::MvReinforce => PgAlgorithm::MvReinforce,
            AlgorithmName::Sharpe => PgAlgorithm::Sharpe { mode: p.sharpe_mode, floor: p.sharpe_floor },
            AlgorithmName::Cvar => {
                PgAlgorithm::Cvar { level: p.cvar_level, initial_var: p.cvar_initial_var }
            }
            _ => return None,
        };
        Some(PgConfig {
            algorithm,
            batch_size: p.batch_size,
            iterations: p.iterations,
            schedule: p.schedule,
            estimator: p.estimator,
            distributional: p.distributional,
            max_episode_steps: p.max_episode_steps,
        })
    }
}

/// Either an explicit list or `count` consecutive seeds from `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Range { base: 0, count: 25 }
    }
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { base, count } => (*base..base + count).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartRule {
    /// Draw from the environment's initial distribution.
    #[default]
    Initial,
    State(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    /// Continuing rollout of this many steps, restarting after each episode.
    pub n_steps: Option<u64>,
    /// Number of independent episodes.
    pub n_episodes: Option<u64>,
    /// Episode cap when the environment has no horizon of its own.
    pub horizon: Option<usize>,
    pub start: StartRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvConfig,
    pub algorithm: AlgorithmConfig,
    pub beta_sweep: Vec<f64>,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub rollout: RolloutConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub diagnostics: DiagnoseConfig,
}

/// Sample sizes for the `diagnose` verb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseConfig {
    pub n_episodes: usize,
    /// Run length of each replication in the CLT check (continuing chains only).
    pub clt_steps: usize,
    pub clt_replications: usize,
    pub seed: u64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self { n_episodes: 10_000, clt_steps: 10_000, clt_replications: 200, seed: 0 }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse { path: "<config>".into(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// TOML form without the output location, which does not affect results.
    pub fn canonical_toml(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.to_toml()
    }

    /// SHA-256 of [`Self::canonical_toml`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.seeds()
    }

    /// Checks the sweep, the seeds and algorithm/environment compatibility,
    /// and returns the environment MDP.
    pub fn validate(&self) -> CliResult<TabularMdp> {
        if self.beta_sweep.is_empty() {
            return Err(CliError::Config("beta_sweep is empty".into()));
        }
        if self.beta_sweep.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(CliError::Config("β values must be finite and nonnegative".into()));
        }
        let mut sorted = self.beta_sweep.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("beta_sweep has duplicates".into()));
        }
        let seeds = self.seed_list();
        if seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        let mut s = seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != seeds.len() {
            return Err(CliError::Config("seed list has duplicates".into()));
        }
        let mdp = self.environment.build_mdp()?;
        let name = self.algorithm.name;
        if name == AlgorithmName::CmvR && mdp.is_episodic() {
            return Err(CliError::Config(
                "cmv-r needs a continuing environment; the configured one is episodic".into(),
            ));
        }
        if name != AlgorithmName::CmvR && name != AlgorithmName::ActorCritic && !mdp.is_episodic() {
            return Err(CliError::Config(format!("{name:?} needs an episodic environment")));
        }
        match name {
            AlgorithmName::CmvQ => self.algorithm.learning.validate()?,
            AlgorithmName::CmvR => {
                self.algorithm.r_learning.alpha1.validate()?;
                self.algorithm.r_learning.alpha2.validate()?;
            }
            AlgorithmName::ActorCritic => self.algorithm.actor_critic.schedule.validate()?,
            _ => self.algorithm.pg_config().expect("batch method").validate()?,
        }
        let r = &self.rollout;
        if r.n_steps.is_some() && r.n_episodes.is_some() {
            return Err(CliError::Config("set either rollout.n_steps or rollout.n_episodes".into()));
        }
        if matches!(r.n_steps, Some(0)) || matches!(r.n_episodes, Some(0)) || r.horizon == Some(0) {
            return Err(CliError::Config("rollout sizes must be positive".into()));
        }
        if let StartRule::State(s) = r.start {
            if s >= mdp.n_states() {
                return Err(CliError::Config(format!("rollout start state {s} does not exist")));
            }
        }
        Ok(mdp)
    }
}

/// Shorthand used by tests and examples.
pub fn power_law(exponent: f64) -> StepSize {
    StepSize::PowerLaw { exponent }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
beta_sweep = [0.0, 2.0]
seeds = { base = 1000, count = 3 }
output_dir = "out/grid"

[environment]
kind = "grid"

[algorithm]
name = "cmv-q"

[algorithm.learning]
n_steps = 1000

[rollout]
n_steps = 500
"#;

    #[test]
    fn grid_config_parses_and_validates() {
        let c = ExperimentConfig::from_toml(GRID).unwrap();
        assert_eq!(c.seed_list(), vec![1000, 1001, 1002]);
        assert_eq!(c.algorithm.learning.n_steps, 1000);
        assert_eq!(c.algorithm.learning.epsilon, 0.1);
        let mdp = c.validate().unwrap();
        assert_eq!(mdp.n_states(), 16);
    }

    #[test]
    fn canonical_form_round_trips_and_hash_is_stable() {
        let c = ExperimentConfig::from_toml(GRID).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        let moved = ExperimentConfig { output_dir: "elsewhere".into(), ..c.clone() };
        assert_eq!(moved.hash(), c.hash());
    }

    #[test]
    fn empty_seed_list_rejected() {
        let text = GRID.replace("seeds = { base = 1000, count = 3 }", "seeds = []");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn r_learning_on_episodic_environment_rejected() {
        let text = GRID.replace("name = \"cmv-q\"", "name = \"cmv-r\"");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("continuing"));
    }
}
