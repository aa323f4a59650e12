//! Estimators of the conditional mean reward `R̄(s, a)`.
//!
//! The chaotic increment `R_{t+1} − R̄(s_t, a_t)` is only observable through an
//! estimate of `R̄`. Three flavours are provided:
//!
//! * tabular running means (exact sample averages per pair),
//! * a linear model over one-hot `(s, a)` features fitted on an experience
//!   replay buffer by the distributional update,
//! * a frozen table of known means, used by oracles.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    Tabular,
    LinearReplay,
    Frozen,
}

/// Hyperparameters of the replay-fitted model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistributionalConfig {
    /// Gradient steps per update.
    pub n_sgd_steps: usize,
    /// Tuples drawn from the replay buffer per update.
    pub n_samples: usize,
    pub step_size: f64,
    /// FIFO capacity of the replay buffer.
    pub capacity: usize,
}

impl Default for DistributionalConfig {
    fn default() -> Self {
        Self { n_sgd_steps: 10, n_samples: 256, step_size: 0.05, capacity: 100_000 }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Tabular { counts: Vec<u64>, means: Vec<f64> },
    LinearReplay { weights: Vec<f64>, replay: VecDeque<(usize, usize, f64)>, config: DistributionalConfig },
    Frozen { means: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct RewardMeanEstimator {
    n_states: usize,
    n_actions: usize,
    kind: Kind,
}

impl RewardMeanEstimator {
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        let n = n_states * n_actions;
        Self { n_states, n_actions, kind: Kind::Tabular { counts: vec![0; n], means: vec![0.0; n] } }
    }

    /// Linear model with weights initialised to zero.
    pub fn linear_replay(n_states: usize, n_actions: usize, config: DistributionalConfig) -> Self {
        Self::linear_with_weights(n_states, n_actions, vec![0.0; n_states * n_actions], config)
    }

    pub fn linear_with_weights(
        n_states: usize,
        n_actions: usize,
        weights: Vec<f64>,
        config: DistributionalConfig,
    ) -> Self {
        assert_eq!(weights.len(), n_states * n_actions, "one weight per (state, action)");
        Self {
            n_states,
            n_actions,
            kind: Kind::LinearReplay { weights, replay: VecDeque::new(), config },
        }
    }

    /// A fixed table of means, row-major by state. Observations are ignored.
    pub fn frozen(n_states: usize, n_actions: usize, means: Vec<f64>) -> Self {
        assert_eq!(means.len(), n_states * n_actions, "one mean per (state, action)");
        Self { n_states, n_actions, kind: Kind::Frozen { means } }
    }

    /// Frozen table holding the exact `R̄` of `mdp`.
    pub fn exact(mdp: &TabularMdp) -> Self {
        Self::frozen(mdp.n_states(), mdp.n_actions(), mdp.mean_reward_table())
    }

    pub fn new(mode: EstimatorMode, mdp: &TabularMdp, config: DistributionalConfig) -> Self {
        match mode {
            EstimatorMode::Tabular => Self::tabular(mdp.n_states(), mdp.n_actions()),
            EstimatorMode::LinearReplay => {
                Self::linear_replay(mdp.n_states(), mdp.n_actions(), config)
            }
            EstimatorMode::Frozen => Self::exact(mdp),
        }
    }

    pub fn mode(&self) -> EstimatorMode {
        match self.kind {
            Kind::Tabular { .. } => EstimatorMode::Tabular,
            Kind::LinearReplay { .. } => EstimatorMode::LinearReplay,
            Kind::Frozen { .. } => EstimatorMode::Frozen,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn idx(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Running-mean update `N += 1; R̂ += (r − R̂) / N`. Tabular mode only.
    pub fn update_reward_mean(&mut self, s: usize, a: usize, r: f64) -> Result<()> {
        let i = self.idx(s, a);
        match &mut self.kind {
            Kind::Tabular { counts, means } => {
                counts[i] += 1;
                means[i] += (r - means[i]) / counts[i] as f64;
                Ok(())
            }
            _ => Err(Error::Unsupported("running-mean update requires tabular mode".into())),
        }
    }

    /// Records one observation in whatever way the mode consumes it.
    pub fn observe(&mut self, s: usize, a: usize, r: f64) {
        match &mut self.kind {
            Kind::Tabular { .. } => {
                self.update_reward_mean(s, a, r).expect("tabular");
            }
            Kind::LinearReplay { replay, config, .. } => {
                if replay.len() == config.capacity {
                    replay.pop_front();
                }
                replay.push_back((s, a, r));
            }
            Kind::Frozen { .. } => {}
        }
    }

    /// Runs the distributional update with the configured hyperparameters in
    /// linear-replay mode; no-op otherwise.
    pub fn refresh<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if let Kind::LinearReplay { config, .. } = &self.kind {
            let c = *config;
            self.distributional_update(c.n_sgd_steps, c.n_samples, c.step_size, rng)?;
        }
        Ok(())
    }

    /// Fits the linear model on a draw from the replay buffer.
    ///
    /// Draws `min(n_samples, |buffer|)` tuples without replacement, averages the
    /// rewards of each unique `(s, a)` pair, then takes `n_sgd_steps` passes of
    /// gradient descent on `(R̂(s, a) − R̃)²` over those pairs.
    pub fn distributional_update<R: Rng + ?Sized>(
        &mut self,
        n_sgd_steps: usize,
        n_samples: usize,
        step_size: f64,
        rng: &mut R,
    ) -> Result<()> {
        let n_actions = self.n_actions;
        let Kind::LinearReplay { weights, replay, .. } = &mut self.kind else {
            return Err(Error::Unsupported("distributional update requires linear-replay mode".into()));
        };
        if replay.is_empty() {
            return Err(Error::NoData);
        }
        let amount = n_samples.min(replay.len());
        let mut targets: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for i in rand::seq::index::sample(rng, replay.len(), amount) {
            let (s, a, r) = replay[i];
            let e = targets.entry(s * n_actions + a).or_insert((0.0, 0));
            e.0 += r;
            e.1 += 1;
        }
        let targets: Vec<(usize, f64)> =
            targets.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect();
        for _ in 0..n_sgd_steps {
            for &(k, target) in &targets {
                // One-hot features: the gradient touches a single weight.
                weights[k] -= step_size * 2.0 * (weights[k] - target);
            }
        }
        Ok(())
    }

    /// Current estimate of `R̄(s, a)`.
    ///
    /// Tabular mode refuses pairs that were never observed instead of
    /// returning a default.
    pub fn estimate(&self, s: usize, a: usize) -> Result<f64> {
        let i = self.idx(s, a);
        match &self.kind {
            Kind::Tabular { counts, means } => {
                if counts[i] == 0 {
                    Err(Error::MissingEstimate { state: s, action: a })
                } else {
                    Ok(means[i])
                }
            }
            Kind::LinearReplay { weights, .. } => Ok(weights[i]),
            Kind::Frozen { means } => Ok(means[i]),
        }
    }

    /// Number of observations of `(s, a)`; zero outside tabular mode.
    pub fn count(&self, s: usize, a: usize) -> u64 {
        match &self.kind {
            Kind::Tabular { counts, .. } => counts[self.idx(s, a)],
            _ => 0,
        }
    }

    pub fn replay_len(&self) -> usize {
        match &self.kind {
            Kind::LinearReplay { replay, .. } => replay.len(),
            _ => 0,
        }
    }

    /// Estimates as a row-major table, `None` where tabular mode has no data.
    pub fn table(&self) -> Vec<Option<f64>> {
        (0..self.n_states)
            .flat_map(|s| (0..self.n_actions).map(move |a| (s, a)))
            .map(|(s, a)| self.estimate(s, a).ok())
            .collect()
    }
}
