use serde::{Deserialize, Serialize};

use super::{
    cmv_reinforce_iteration, cvar_pg_iteration, mv_reinforce_iteration, sharpe_pg_iteration,
    BatchContext, CvarState, IterationLog, SharpeMode, SharpeState, SoftmaxPolicy,
    TimescaleSchedule,
};
use crate::diagnostics::{mean, variance};
use crate::error::{Error, Result};
use crate::estimator::{DistributionalConfig, EstimatorMode, RewardMeanEstimator};
use crate::mdp::TabularMdp;
use crate::value::StepSize;

/// Monte-Carlo policy-gradient method and its own hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PgAlgorithm {
    CmvReinforce,
    MvReinforce,
    Sharpe {
        #[serde(default)]
        mode: SharpeMode,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    Cvar {
        level: f64,
        #[serde(default)]
        initial_var: f64,
    },
}

fn default_floor() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgConfig {
    pub algorithm: PgAlgorithm,
    pub batch_size: usize,
    pub iterations: u64,
    /// `alpha1` drives `θ`; `alpha2` drives the Sharpe and VaR trackers.
    pub schedule: TimescaleSchedule,
    pub estimator: EstimatorMode,
    pub distributional: DistributionalConfig,
    /// Truncation length for MDPs without a horizon.
    pub max_episode_steps: usize,
}

impl Default for PgConfig {
    fn default() -> Self {
        Self {
            algorithm: PgAlgorithm::CmvReinforce,
            batch_size: 10_000,
            iterations: 5_000,
            schedule: TimescaleSchedule {
                alpha1: StepSize::Constant { value: 0.1 },
                ..TimescaleSchedule::default()
            },
            estimator: EstimatorMode::Tabular,
            distributional: DistributionalConfig::default(),
            max_episode_steps: 500,
        }
    }
}

impl PgConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::Config("max_episode_steps must be positive".into()));
        }
        if let PgAlgorithm::Cvar { level, initial_var } = self.algorithm {
            CvarState::new(initial_var, level)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PgOutcome {
    pub policy: SoftmaxPolicy,
    pub estimator: RewardMeanEstimator,
    pub log: Vec<IterationLog>,
}

/// Trains a softmax policy from `θ = 0` for `config.iterations` batches.
///
/// `beta` weighs the risk term of the CMV and MV objectives; the Sharpe and
/// CVaR methods take their parameters from `config.algorithm` instead.
pub fn train_policy_gradient(
    mdp: &TabularMdp,
    config: &PgConfig,
    beta: f64,
    seed: u64,
) -> Result<PgOutcome> {
    config.validate()?;
    let mut policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions());
    let mut est = RewardMeanEstimator::new(config.estimator, mdp, config.distributional);
    let mut sharpe = match config.algorithm {
        PgAlgorithm::Sharpe { mode, floor } => Some(SharpeState::new(floor, mode)),
        _ => None,
    };
    let mut cvar = match config.algorithm {
        PgAlgorithm::Cvar { level, initial_var } => Some(CvarState::new(initial_var, level)?),
        _ => None,
    };
    let mut log = Vec::with_capacity(config.iterations as usize);
    for iteration in 0..config.iterations {
        let ctx = BatchContext { seed, iteration, max_steps: config.max_episode_steps };
        let alpha = config.schedule.alpha1.at(ctx.step_index());
        let b = config.batch_size;
        let (g, penalty, aux) = match config.algorithm {
            PgAlgorithm::CmvReinforce => {
                let g = cmv_reinforce_iteration(&mut policy, mdp, &mut est, b, beta, alpha, &ctx)?;
                let p = 0.5 * beta * g.mean_quadratic_variation();
                (g, p, None)
            }
            PgAlgorithm::MvReinforce => {
                let g = mv_reinforce_iteration(&mut policy, mdp, b, beta, alpha, &ctx)?;
                let p = 0.5 * beta * variance(&g.returns);
                (g, p, None)
            }
            PgAlgorithm::Sharpe { .. } => {
                let st = sharpe.as_mut().expect("sharpe state");
                let (_, g) =
                    sharpe_pg_iteration(&mut policy, mdp, &mut est, b, &config.schedule, st, &ctx)?;
                let p = g.mean_quadratic_variation();
                (g, p, Some(st.ratio()))
            }
            PgAlgorithm::Cvar { .. } => {
                let st = cvar.as_mut().expect("cvar state");
                let g = cvar_pg_iteration(&mut policy, mdp, &mut est, b, &config.schedule, st, &ctx)?;
                let p = mean(&g.quadratic_variations);
                (g, p, Some(st.var))
            }
        };
        log.push(IterationLog {
            iteration,
            mean_return: g.mean_return(),
            mean_penalty: penalty,
            grad_norm: g.norm(),
            aux,
        });
    }
    Ok(PgOutcome { policy, estimator: est, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RegimeSwitchConfig;

    #[test]
    fn config_round_trips_through_toml() {
        let c = PgConfig {
            algorithm: PgAlgorithm::Cvar { level: 0.9, initial_var: 0.0 },
            ..Default::default()
        };
        let text = toml::to_string(&c).unwrap();
        let back: PgConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cmv_learns_quiet_action_on_noisy_toy() {
        // Large noise makes the risky action clearly worse for β = 1.
        let mdp = RegimeSwitchConfig::toy(3.0, 5).build_mdp().unwrap();
        let config = PgConfig { batch_size: 200, iterations: 150, ..Default::default() };
        let out = train_policy_gradient(&mdp, &config, 1.0, 11).unwrap();
        for s in 0..2 {
            assert!(out.policy.probs(s)[0] > 0.9, "state {s}: {:?}", out.policy.probs(s));
        }
        assert_eq!(out.log.len(), 150);
    }

    #[test]
    fn training_is_reproducible() {
        let mdp = RegimeSwitchConfig::toy(0.5, 4).build_mdp().unwrap();
        let config = PgConfig { batch_size: 64, iterations: 5, ..Default::default() };
        let a = train_policy_gradient(&mdp, &config, 2.0, 5).unwrap();
        let b = train_policy_gradient(&mdp, &config, 2.0, 5).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.log, b.log);
    }
}
