use super::{epsilon_greedy, LearningSchedule, QTable};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{TabularMdp, Transition};
use crate::rng::stream;

/// One risk-adjusted Q-learning update of the visited pair.
///
/// `est` must already contain this transition's reward, so a first visit has
/// zero deviation. `done` marks the end of the episode (terminal state or
/// horizon), where the bootstrap value is zero.
pub fn cmv_q_step(
    q: &mut QTable,
    est: &RewardMeanEstimator,
    tr: &Transition,
    done: bool,
    alpha: f64,
) -> Result<()> {
    q.check_episodic()?;
    if q.is_terminal(tr.state) {
        return Ok(());
    }
    let dev = tr.reward - est.estimate(tr.state, tr.action)?;
    let bootstrap = if done { 0.0 } else { q.max(tr.next_state) };
    let target = tr.reward - 0.5 * q.beta() * dev * dev + bootstrap;
    let old = q.get(tr.state, tr.action);
    q.set(tr.state, tr.action, (1.0 - alpha) * old + alpha * target);
    Ok(())
}

/// ε-greedy risk-adjusted Q-learning for `schedule.n_steps` environment steps.
///
/// Episode `k` draws from its own stream `(seed, k)`. Within a step the draws
/// are: exploration uniform, random action (only when exploring), next state,
/// reward noise.
pub fn train_cmv_q(
    mdp: &TabularMdp,
    schedule: &LearningSchedule,
    beta: f64,
    seed: u64,
) -> Result<(QTable, RewardMeanEstimator)> {
    schedule.validate()?;
    if !mdp.is_episodic() {
        return Err(Error::Unsupported("risk-adjusted Q-learning needs an episodic MDP".into()));
    }
    let mut q = QTable::new(mdp, beta);
    q.check_episodic()?;
    let mut est = RewardMeanEstimator::tabular(mdp.n_states(), mdp.n_actions());
    let cap = mdp.horizon().unwrap_or(schedule.max_episode_steps);
    let mut steps = 0u64;
    let mut episode = 0u64;
    while steps < schedule.n_steps {
        let mut rng = stream(seed, &[episode]);
        let mut s = mdp.sample_initial(&mut rng);
        let mut t = 0;
        while !mdp.is_terminal(s) && t < cap && steps < schedule.n_steps {
            let a = epsilon_greedy(&q, s, schedule.epsilon, &mut rng);
            let (reward, next) = mdp.step(s, a, &mut rng)?;
            est.update_reward_mean(s, a, reward)?;
            let alpha = schedule.alpha.at(est.count(s, a));
            let done = mdp.is_terminal(next) || mdp.horizon() == Some(t + 1);
            let tr = Transition { state: s, action: a, reward, next_state: next };
            cmv_q_step(&mut q, &est, &tr, done, alpha)?;
            s = next;
            t += 1;
            steps += 1;
        }
        episode += 1;
    }
    Ok((q, est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RegimeSwitchConfig;
    use crate::mdp::MdpBuilder;
    use crate::mdp::TableReward;
    use std::sync::Arc;

    fn chain() -> TabularMdp {
        let reward = TableReward::from_state_action(2, &[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        MdpBuilder::new(
            vec![vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![0.0, 1.0]]],
            Arc::new(reward),
        )
        .start_state(0)
        .terminal(vec![1])
        .build()
        .unwrap()
    }

    #[test]
    fn first_visit_has_no_penalty() {
        let mdp = chain();
        let mut q = QTable::new(&mdp, 1e6);
        let mut est = RewardMeanEstimator::tabular(2, 2);
        est.update_reward_mean(0, 1, 37.0).unwrap();
        let tr = Transition { state: 0, action: 1, reward: 37.0, next_state: 1 };
        cmv_q_step(&mut q, &est, &tr, true, 1.0).unwrap();
        assert_eq!(q.get(0, 1), 37.0);
    }

    #[test]
    fn full_step_overwrites_with_target() {
        let rows = vec![vec![0.5, 0.0], vec![4.0, 7.0]];
        let mut q = QTable::from_rows(&rows, 3.0);
        let mut est = RewardMeanEstimator::tabular(2, 2);
        est.update_reward_mean(0, 0, 2.0).unwrap();
        est.update_reward_mean(0, 0, 2.0).unwrap();
        let tr = Transition { state: 0, action: 0, reward: 2.0, next_state: 1 };
        cmv_q_step(&mut q, &est, &tr, false, 1.0).unwrap();
        assert_eq!(q.get(0, 0), 9.0);
    }

    #[test]
    fn discounted_setting_is_refused() {
        let reward = TableReward::from_state_action(1, &[vec![1.0]]).unwrap();
        let mdp = MdpBuilder::new(vec![vec![vec![1.0]]], Arc::new(reward)).gamma(0.9).build().unwrap();
        let mut q = QTable::new(&mdp, 0.0);
        let est = RewardMeanEstimator::frozen(1, 1, vec![1.0]);
        let tr = Transition { state: 0, action: 0, reward: 1.0, next_state: 0 };
        assert!(matches!(cmv_q_step(&mut q, &est, &tr, false, 0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn training_is_reproducible() {
        let mdp = RegimeSwitchConfig::toy(0.16, 20).build_mdp().unwrap();
        let sched = LearningSchedule { n_steps: 5_000, ..Default::default() };
        let (a, _) = train_cmv_q(&mdp, &sched, 2.0, 9).unwrap();
        let (b, _) = train_cmv_q(&mdp, &sched, 2.0, 9).unwrap();
        assert_eq!(a, b);
    }
}
