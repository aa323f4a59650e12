use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SoftmaxPolicy, TimescaleSchedule};
use crate::error::{Error, Result};
use crate::estimator::{DistributionalConfig, EstimatorMode, RewardMeanEstimator};
use crate::mdp::{draw_index, TabularMdp, Transition};
use crate::rng::stream;
use crate::value::AverageRewardState;

/// State features of a linear critic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateFeatures {
    OneHot { n_states: usize },
    /// One feature row per state.
    Table { rows: Vec<Vec<f64>> },
}

impl StateFeatures {
    pub fn dim(&self) -> usize {
        match self {
            Self::OneHot { n_states } => *n_states,
            Self::Table { rows } => rows.first().map_or(0, Vec::len),
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            Self::OneHot { n_states } => *n_states,
            Self::Table { rows } => rows.len(),
        }
    }

    /// `λᵀφ(s)`.
    pub fn value(&self, lambda: &[f64], s: usize) -> f64 {
        match self {
            Self::OneHot { .. } => lambda[s],
            Self::Table { rows } => rows[s].iter().zip(lambda).map(|(f, l)| f * l).sum(),
        }
    }

    /// `λ += c φ(s)`.
    pub fn add_scaled(&self, lambda: &mut [f64], s: usize, c: f64) {
        match self {
            Self::OneHot { .. } => lambda[s] += c,
            Self::Table { rows } => {
                for (l, f) in lambda.iter_mut().zip(&rows[s]) {
                    *l += c * f;
                }
            }
        }
    }
}

/// Linear critics for the expected return (`lambda1`) and the expected
/// chaotic quadratic variation (`lambda2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub features1: StateFeatures,
    pub features2: StateFeatures,
}

impl CriticParams {
    pub fn one_hot(n_states: usize) -> Self {
        Self::new(StateFeatures::OneHot { n_states }, StateFeatures::OneHot { n_states })
    }

    /// Zero coefficients on the given features.
    pub fn new(features1: StateFeatures, features2: StateFeatures) -> Self {
        Self {
            lambda1: vec![0.0; features1.dim()],
            lambda2: vec![0.0; features2.dim()],
            features1,
            features2,
        }
    }

    pub fn value1(&self, s: usize) -> f64 {
        self.features1.value(&self.lambda1, s)
    }

    pub fn value2(&self, s: usize) -> f64 {
        self.features2.value(&self.lambda2, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdErrors {
    /// Reward critic error.
    pub delta1: f64,
    /// Quadratic-variation critic error.
    pub delta2: f64,
}

fn update_actor_and_critics(
    policy: &mut SoftmaxPolicy,
    critics: &mut CriticParams,
    s: usize,
    a: usize,
    td: TdErrors,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
) {
    let CriticParams { lambda1, lambda2, features1, features2 } = critics;
    features1.add_scaled(lambda1, s, alpha2 * td.delta1);
    features2.add_scaled(lambda2, s, alpha2 * td.delta2);
    let adv = td.delta1 - 0.5 * beta * td.delta2;
    let probs = policy.probs(s);
    let base = policy.index(s, 0);
    let theta = policy.theta_mut();
    for (k, p) in probs.iter().enumerate() {
        let score = if k == a { 1.0 - p } else { -p };
        theta[base + k] += alpha1 * (score * adv);
    }
}

/// One online update in the episodic setting.
///
/// `est` must already include this transition. `done` marks the last
/// transition of the episode; both critics then value the next state at 0.
/// Steps are `(alpha1, alpha2, _)` for the policy and the critics.
pub fn actor_critic_step_episodic(
    policy: &mut SoftmaxPolicy,
    critics: &mut CriticParams,
    est: &RewardMeanEstimator,
    tr: &Transition,
    done: bool,
    steps: (f64, f64, f64),
    beta: f64,
) -> Result<TdErrors> {
    let dev = tr.reward - est.estimate(tr.state, tr.action)?;
    let (next1, next2) =
        if done { (0.0, 0.0) } else { (critics.value1(tr.next_state), critics.value2(tr.next_state)) };
    let td = TdErrors {
        delta1: tr.reward + next1 - critics.value1(tr.state),
        delta2: dev * dev + next2 - critics.value2(tr.state),
    };
    update_actor_and_critics(policy, critics, tr.state, tr.action, td, steps.0, steps.1, beta);
    Ok(td)
}

/// One online update in the average-reward setting.
///
/// The averages move first on the `alpha3` timescale and the recentred TD
/// errors use their new values.
pub fn actor_critic_step_average(
    policy: &mut SoftmaxPolicy,
    critics: &mut CriticParams,
    est: &RewardMeanEstimator,
    avg: &mut AverageRewardState,
    tr: &Transition,
    steps: (f64, f64, f64),
    beta: f64,
) -> Result<TdErrors> {
    let dev = tr.reward - est.estimate(tr.state, tr.action)?;
    let dev2 = dev * dev;
    let (alpha1, alpha2, alpha3) = steps;
    avg.rho = (1.0 - alpha3) * avg.rho + alpha3 * tr.reward;
    avg.sigma_bar = (1.0 - alpha3) * avg.sigma_bar + alpha3 * dev2;
    let td = TdErrors {
        delta1: tr.reward - avg.rho + critics.value1(tr.next_state) - critics.value1(tr.state),
        delta2: dev2 - avg.sigma_bar + critics.value2(tr.next_state) - critics.value2(tr.state),
    };
    update_actor_and_critics(policy, critics, tr.state, tr.action, td, alpha1, alpha2, beta);
    Ok(td)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActorCriticConfig {
    pub schedule: TimescaleSchedule,
    pub n_steps: u64,
    pub estimator: EstimatorMode,
    pub distributional: DistributionalConfig,
    /// Truncation length for episodic MDPs without a horizon.
    pub max_episode_steps: usize,
}

impl Default for ActorCriticConfig {
    fn default() -> Self {
        Self {
            schedule: TimescaleSchedule::default(),
            n_steps: 500_000,
            estimator: EstimatorMode::Tabular,
            distributional: DistributionalConfig::default(),
            max_episode_steps: 500,
        }
    }
}

/// Draws from `π(· | s)` with one uniform.
pub(crate) fn sample_action<R: Rng + ?Sized>(
    policy: &SoftmaxPolicy,
    s: usize,
    buf: &mut Vec<f64>,
    rng: &mut R,
) -> usize {
    buf.resize(policy.n_actions(), 0.0);
    policy.probs_into(s, buf);
    let mut acc = 0.0;
    for p in buf.iter_mut() {
        acc += *p;
        *p = acc;
    }
    draw_index(buf, rng.random::<f64>())
}

/// Trained actor, critics and estimator; `average` is set for continuing MDPs.
#[derive(Clone, Debug)]
pub struct ActorCriticOutcome {
    pub policy: SoftmaxPolicy,
    pub critics: CriticParams,
    pub estimator: RewardMeanEstimator,
    pub average: Option<AverageRewardState>,
}

/// Runs `n_steps` online updates with one-hot critics.
///
/// Episodic MDPs restart an episode from stream `(seed, episode)`;
/// continuing MDPs follow a single trajectory from stream `(seed, 0)`.
/// Step sizes are indexed by the global step counter.
pub fn train_actor_critic(
    mdp: &TabularMdp,
    config: &ActorCriticConfig,
    beta: f64,
    seed: u64,
) -> Result<ActorCriticOutcome> {
    config.schedule.validate()?;
    if config.max_episode_steps == 0 {
        return Err(Error::Config("max_episode_steps must be positive".into()));
    }
    let mut policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions());
    let mut critics = CriticParams::one_hot(mdp.n_states());
    let mut est = RewardMeanEstimator::new(config.estimator, mdp, config.distributional);
    let mut refresh_rng = stream(seed, &[u64::MAX]);
    let mut buf = Vec::new();
    let mut observe = |est: &mut RewardMeanEstimator, tr: &Transition| -> Result<()> {
        est.observe(tr.state, tr.action, tr.reward);
        est.refresh(&mut refresh_rng)
    };
    if mdp.is_episodic() {
        let cap = mdp.horizon().unwrap_or(config.max_episode_steps);
        let mut n = 0u64;
        let mut episode = 0u64;
        while n < config.n_steps {
            let mut rng = stream(seed, &[episode]);
            let mut s = mdp.sample_initial(&mut rng);
            let mut t = 0usize;
            while n < config.n_steps && !mdp.is_terminal(s) && t < cap {
                let a = sample_action(&policy, s, &mut buf, &mut rng);
                let (reward, next) = mdp.step(s, a, &mut rng)?;
                let tr = Transition { state: s, action: a, reward, next_state: next };
                observe(&mut est, &tr)?;
                n += 1;
                t += 1;
                let done = mdp.is_terminal(next) || mdp.horizon() == Some(t);
                let steps = config.schedule.at(n);
                actor_critic_step_episodic(&mut policy, &mut critics, &est, &tr, done, steps, beta)?;
                s = next;
            }
            episode += 1;
        }
        Ok(ActorCriticOutcome { policy, critics, estimator: est, average: None })
    } else {
        let mut avg = AverageRewardState::default();
        let mut rng = stream(seed, &[0]);
        let mut s = mdp.sample_initial(&mut rng);
        for n in 1..=config.n_steps {
            let a = sample_action(&policy, s, &mut buf, &mut rng);
            let (reward, next) = mdp.step(s, a, &mut rng)?;
            let tr = Transition { state: s, action: a, reward, next_state: next };
            observe(&mut est, &tr)?;
            let steps = config.schedule.at(n);
            actor_critic_step_average(&mut policy, &mut critics, &est, &mut avg, &tr, steps, beta)?;
            s = next;
        }
        Ok(ActorCriticOutcome { policy, critics, estimator: est, average: Some(avg) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpBuilder, TableReward};
    use std::sync::Arc;

    fn constant_chain(c: f64) -> TabularMdp {
        let reward = TableReward::from_state_action(1, &[vec![c, c]]).unwrap();
        MdpBuilder::new(vec![vec![vec![1.0], vec![1.0]]], Arc::new(reward))
            .average_reward()
            .build()
            .unwrap()
    }

    #[test]
    fn average_tracks_a_constant_reward_geometrically() {
        let mdp = constant_chain(2.5);
        let config = ActorCriticConfig {
            schedule: TimescaleSchedule::constant(0.01, 0.05, 0.1),
            n_steps: 300,
            ..Default::default()
        };
        let out = train_actor_critic(&mdp, &config, 1.0, 3).unwrap();
        let avg = out.average.unwrap();
        assert!((avg.rho - 2.5).abs() <= 2.5 * 0.9f64.powi(300) + 1e-12);
        assert_eq!(avg.sigma_bar, 0.0);
    }

    #[test]
    fn zero_quadratic_critic_stays_zero_without_noise() {
        let reward = TableReward::from_state_action(2, &[vec![1.0, 0.0], vec![3.0, -1.0]]).unwrap();
        let mdp = MdpBuilder::new(
            vec![vec![vec![0.5, 0.5]; 2], vec![vec![0.2, 0.8]; 2]],
            Arc::new(reward),
        )
        .horizon(5)
        .build()
        .unwrap();
        let config = ActorCriticConfig { n_steps: 2_000, ..Default::default() };
        let out = train_actor_critic(&mdp, &config, 3.0, 9).unwrap();
        assert!(out.critics.lambda2.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn table_features_match_one_hot_identity() {
        let t = StateFeatures::Table { rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]] };
        let o = StateFeatures::OneHot { n_states: 2 };
        let mut l1 = vec![0.3, -0.2];
        let mut l2 = l1.clone();
        t.add_scaled(&mut l1, 1, 0.5);
        o.add_scaled(&mut l2, 1, 0.5);
        assert_eq!(l1, l2);
        assert_eq!(t.value(&l1, 0), o.value(&l2, 0));
    }
}
