use serde::{Deserialize, Serialize};

use super::{epsilon_greedy, QTable, StepSize};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{TabularMdp, Transition};
use crate::rng::stream;

/// Running estimates of the long-run average reward and of the long-run
/// average squared deviation `(R − R̄)²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AverageRewardState {
    pub rho: f64,
    pub sigma_bar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RLearningSchedule {
    /// Q step size, driven by the visit count of the updated pair.
    pub alpha1: StepSize,
    /// Average-estimate step size, driven by the global step counter.
    pub alpha2: StepSize,
    pub epsilon: f64,
    pub n_steps: u64,
}

impl Default for RLearningSchedule {
    fn default() -> Self {
        Self {
            alpha1: StepSize::PowerLaw { exponent: 0.5 },
            alpha2: StepSize::PowerLaw { exponent: 0.6 },
            epsilon: 0.1,
            n_steps: 500_000,
        }
    }
}

/// One coupled update of `Q`, `ρ` and `σ̄`.
///
/// Every right-hand side uses the pre-update `Q`, `ρ` and `σ̄`; `est` must
/// already include this transition.
pub fn cmv_r_step(
    q: &mut QTable,
    est: &RewardMeanEstimator,
    avg: &mut AverageRewardState,
    tr: &Transition,
    alpha1: f64,
    alpha2: f64,
) -> Result<()> {
    let dev = tr.reward - est.estimate(tr.state, tr.action)?;
    let dev2 = dev * dev;
    let next_max = q.max(tr.next_state);
    let here_max = q.max(tr.state);
    let old = q.get(tr.state, tr.action);
    let target = tr.reward - avg.rho - 0.5 * q.beta() * (dev2 - avg.sigma_bar) + next_max;
    q.set(tr.state, tr.action, (1.0 - alpha1) * old + alpha1 * target);
    let correction = next_max - here_max;
    avg.rho = (1.0 - alpha2) * avg.rho + alpha2 * (tr.reward + correction);
    avg.sigma_bar = (1.0 - alpha2) * avg.sigma_bar + alpha2 * (dev2 + correction);
    Ok(())
}

/// ε-greedy risk-adjusted R-learning along a single continuing trajectory
/// drawn from stream `(seed, 0)`.
pub fn train_cmv_r(
    mdp: &TabularMdp,
    schedule: &RLearningSchedule,
    beta: f64,
    seed: u64,
) -> Result<(QTable, RewardMeanEstimator, AverageRewardState)> {
    schedule.alpha1.validate()?;
    schedule.alpha2.validate()?;
    if mdp.is_episodic() {
        return Err(Error::Unsupported("R-learning needs a continuing MDP".into()));
    }
    let mut q = QTable::new(mdp, beta);
    let mut est = RewardMeanEstimator::tabular(mdp.n_states(), mdp.n_actions());
    let mut avg = AverageRewardState::default();
    let mut rng = stream(seed, &[0]);
    let mut s = mdp.sample_initial(&mut rng);
    for step in 1..=schedule.n_steps {
        let a = epsilon_greedy(&q, s, schedule.epsilon, &mut rng);
        let (reward, next) = mdp.step(s, a, &mut rng)?;
        est.update_reward_mean(s, a, reward)?;
        let tr = Transition { state: s, action: a, reward, next_state: next };
        let a1 = schedule.alpha1.at(est.count(s, a));
        cmv_r_step(&mut q, &est, &mut avg, &tr, a1, schedule.alpha2.at(step))?;
        s = next;
    }
    Ok((q, est, avg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpBuilder, TableReward};
    use std::sync::Arc;

    fn constant(c: f64) -> TabularMdp {
        let reward = TableReward::from_state_action(1, &[vec![c]]).unwrap();
        MdpBuilder::new(vec![vec![vec![1.0]]], Arc::new(reward)).average_reward().build().unwrap()
    }

    #[test]
    fn average_tracks_a_constant_reward() {
        let mdp = constant(3.5);
        let sched = RLearningSchedule { n_steps: 20_000, ..Default::default() };
        let (_, _, avg) = train_cmv_r(&mdp, &sched, 1.0, 0).unwrap();
        assert!((avg.rho - 3.5).abs() < 1e-3, "rho = {}", avg.rho);
        assert!(avg.sigma_bar.abs() < 1e-12);
    }

    #[test]
    fn zero_risk_aversion_is_classical_r_learning() {
        let mut q = QTable::from_rows(&[vec![0.3, -0.2], vec![1.0, 0.4]], 0.0);
        let est = RewardMeanEstimator::frozen(2, 2, vec![5.0, 0.0, 0.0, 0.0]);
        let mut avg = AverageRewardState { rho: 0.7, sigma_bar: 9.0 };
        let tr = Transition { state: 0, action: 0, reward: 2.0, next_state: 1 };
        cmv_r_step(&mut q, &est, &mut avg, &tr, 0.25, 0.5).unwrap();
        // Classical: Q += α(r − ρ + max Q(s') − Q).
        let expected = 0.3 + 0.25 * (2.0 - 0.7 + 1.0 - 0.3);
        assert!((q.get(0, 0) - expected).abs() < 1e-15);
        assert!((avg.rho - (0.5 * 0.7 + 0.5 * (2.0 + 1.0 - 0.3))).abs() < 1e-15);
    }

    #[test]
    fn episodic_mdp_rejected() {
        let reward = TableReward::from_state_action(1, &[vec![1.0]]).unwrap();
        let mdp = MdpBuilder::new(vec![vec![vec![1.0]]], Arc::new(reward)).horizon(3).build().unwrap();
        assert!(train_cmv_r(&mdp, &RLearningSchedule::default(), 0.0, 0).is_err());
    }
}
