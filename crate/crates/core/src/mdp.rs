//! Finite Markov decision processes, transitions and episodes.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Tolerance on the sum of every probability vector.
pub const PROB_TOL: f64 = 1e-12;

/// Reward law `R(s, a, s', h')` where `h'` is hidden noise drawn internally.
///
/// Besides sampling, a model exposes the first two conditional moments given
/// the full transition `(s, a, s')`. Those drive every exact oracle in the crate
/// (conditional mean rewards, modified-reward value iteration, enumeration).
pub trait RewardModel: fmt::Debug + Send + Sync {
    fn sample(&self, state: usize, action: usize, next: usize, rng: &mut dyn RngCore) -> f64;

    /// `E[R | s, a, s']`.
    fn mean(&self, state: usize, action: usize, next: usize) -> f64;

    /// `Var[R | s, a, s']`, the part of the reward carried by the hidden noise.
    fn variance(&self, state: usize, action: usize, next: usize) -> f64;

    /// Declared bound on `|E[R | s, a, s']|` plus ten noise standard deviations.
    fn bound(&self) -> f64;
}

/// Deterministic reward read from a table indexed by `(s, a, s')`.
#[derive(Clone, Debug)]
pub struct TableReward {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl TableReward {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions * n_states {
            return Err(Error::Validation(format!(
                "reward table has {} entries, expected {}",
                values.len(),
                n_states * n_actions * n_states
            )));
        }
        Ok(Self { n_states, n_actions, values })
    }

    /// Reward depending on `(s, a)` only.
    pub fn from_state_action(n_states: usize, rewards: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rewards.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_states * n_actions * n_states);
        for row in rewards {
            for &r in row {
                values.extend(std::iter::repeat_n(r, n_states));
            }
        }
        Self::new(n_states, n_actions, values)
    }

    fn idx(&self, s: usize, a: usize, n: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + n
    }
}

impl RewardModel for TableReward {
    fn sample(&self, s: usize, a: usize, n: usize, _rng: &mut dyn RngCore) -> f64 {
        self.values[self.idx(s, a, n)]
    }
    fn mean(&self, s: usize, a: usize, n: usize) -> f64 {
        self.values[self.idx(s, a, n)]
    }
    fn variance(&self, _s: usize, _a: usize, _n: usize) -> f64 {
        0.0
    }
    fn bound(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One observed step `(s_t, a_t, R_{t+1}, s_{t+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// A finite trajectory. `terminated` is false only when the step cap cut it short.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub start_state: usize,
    pub transitions: Vec<Transition>,
    pub terminated: bool,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.transitions.iter().map(|t| t.reward)
    }

    /// `Σ γ^t R_{t+1}`.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut g = 0.0;
        for t in self.transitions.iter().rev() {
            g = t.reward + gamma * g;
        }
        g
    }

    /// Checks that consecutive transitions chain and the start state matches.
    pub fn validate(&self) -> Result<()> {
        if let Some(first) = self.transitions.first() {
            if first.state != self.start_state {
                return Err(Error::Validation(format!(
                    "episode starts in {} but first transition leaves {}",
                    self.start_state, first.state
                )));
            }
        }
        for (t, w) in self.transitions.windows(2).enumerate() {
            if w[0].next_state != w[1].state {
                return Err(Error::Validation(format!(
                    "transition {t} ends in {} but transition {} starts in {}",
                    w[0].next_state,
                    t + 1,
                    w[1].state
                )));
            }
        }
        Ok(())
    }
}

/// A finite MDP with a stochastic kernel and a (possibly noisy) reward law.
///
/// Episodes end at an absorbing terminal state or, for fixed-horizon problems,
/// after `horizon` steps. Terminal states yield no further reward.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    cumulative: Vec<f64>,
    initial: Vec<f64>,
    initial_cdf: Vec<f64>,
    reward: Arc<dyn RewardModel>,
    gamma: f64,
    terminal: Vec<bool>,
    horizon: Option<usize>,
    average_reward: bool,
}

/// Builder for [`TabularMdp`]; all invariants are checked in [`MdpBuilder::build`].
#[derive(Debug)]
pub struct MdpBuilder {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Arc<dyn RewardModel>,
    initial: Option<Vec<f64>>,
    gamma: f64,
    terminal: Vec<usize>,
    horizon: Option<usize>,
    average_reward: bool,
}

impl MdpBuilder {
    /// `transition[s][a]` is the distribution of the next state.
    pub fn new(transition: Vec<Vec<Vec<f64>>>, reward: Arc<dyn RewardModel>) -> Self {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, Vec::len);
        let flat = transition.into_iter().flatten().flatten().collect();
        Self {
            n_states,
            n_actions,
            transition: flat,
            reward,
            initial: None,
            gamma: 1.0,
            terminal: Vec::new(),
            horizon: None,
            average_reward: false,
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn initial(mut self, dist: Vec<f64>) -> Self {
        self.initial = Some(dist);
        self
    }

    pub fn start_state(mut self, s: usize) -> Self {
        let mut d = vec![0.0; self.n_states];
        if s < self.n_states {
            d[s] = 1.0;
        }
        self.initial = Some(d);
        self
    }

    pub fn terminal(mut self, states: Vec<usize>) -> Self {
        self.terminal = states;
        self
    }

    pub fn horizon(mut self, t: usize) -> Self {
        self.horizon = Some(t);
        self
    }

    /// Continuing task evaluated by its long-run average reward.
    pub fn average_reward(mut self) -> Self {
        self.average_reward = true;
        self
    }

    pub fn build(self) -> Result<TabularMdp> {
        let (ns, na) = (self.n_states, self.n_actions);
        if ns == 0 || na == 0 {
            return Err(Error::Validation("MDP needs at least one state and one action".into()));
        }
        if self.transition.len() != ns * na * ns {
            return Err(Error::Validation("transition kernel is not rectangular".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Validation(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        let episodic = !self.terminal.is_empty() || self.horizon.is_some();
        if self.gamma == 1.0 && !episodic && !self.average_reward {
            return Err(Error::Validation(
                "gamma = 1 requires terminal states, a horizon or the average-reward criterion"
                    .into(),
            ));
        }
        if self.horizon == Some(0) {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        let mut cumulative = Vec::with_capacity(self.transition.len());
        for (k, row) in self.transition.chunks(ns).enumerate() {
            check_distribution(row).map_err(|e| {
                Error::Validation(format!("state {}, action {}: {e}", k / na, k % na))
            })?;
            cumulative.extend(cdf(row));
        }
        let initial = self.initial.unwrap_or_else(|| vec![1.0 / ns as f64; ns]);
        if initial.len() != ns {
            return Err(Error::Validation("initial distribution has wrong length".into()));
        }
        check_distribution(&initial)
            .map_err(|e| Error::Validation(format!("initial distribution: {e}")))?;
        let mut terminal = vec![false; ns];
        for &s in &self.terminal {
            if s >= ns {
                return Err(Error::Validation(format!("terminal state {s} out of range")));
            }
            terminal[s] = true;
        }
        let bound = self.reward.bound();
        for s in 0..ns {
            for a in 0..na {
                for n in 0..ns {
                    let m = self.reward.mean(s, a, n);
                    if !m.is_finite() || m.abs() > bound + 1e-9 {
                        return Err(Error::Validation(format!(
                            "mean reward {m} at ({s}, {a}, {n}) exceeds declared bound {bound}"
                        )));
                    }
                }
            }
        }
        Ok(TabularMdp {
            n_states: ns,
            n_actions: na,
            initial_cdf: cdf(&initial),
            initial,
            transition: self.transition,
            cumulative,
            reward: self.reward,
            gamma: self.gamma,
            terminal,
            horizon: self.horizon,
            average_reward: self.average_reward,
        })
    }
}

pub(crate) fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if let Some(bad) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(format!("invalid probability {bad}"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(format!("probabilities sum to {total}"));
    }
    Ok(())
}

fn cdf(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Inverse-CDF draw; the last index absorbs rounding in the final partial sum.
pub(crate) fn draw_index(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl TabularMdp {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> Vec<usize> {
        (0..self.n_states).filter(|&s| self.terminal[s]).collect()
    }

    pub fn is_episodic(&self) -> bool {
        self.horizon.is_some() || self.terminal.iter().any(|&t| t)
    }

    pub fn is_average_reward(&self) -> bool {
        self.average_reward
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    pub fn reward_model(&self) -> &dyn RewardModel {
        self.reward.as_ref()
    }

    /// Distribution of `s'` given `(s, a)`.
    pub fn transition_probs(&self, s: usize, a: usize) -> &[f64] {
        let k = (s * self.n_actions + a) * self.n_states;
        &self.transition[k..k + self.n_states]
    }

    /// Exact conditional mean reward `R̄(s, a) = E[R_{t+1} | s_t = s, a_t = a]`.
    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.transition_probs(s, a)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(n, p)| p * self.reward.mean(s, a, n))
            .sum()
    }

    /// Exact `Var[R_{t+1} | s_t = s, a_t = a]`, mixing next-state and hidden noise.
    pub fn reward_variance(&self, s: usize, a: usize) -> f64 {
        let mean = self.mean_reward(s, a);
        let v: f64 = self
            .transition_probs(s, a)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(n, p)| {
                let d = self.reward.mean(s, a, n) - mean;
                p * (self.reward.variance(s, a, n) + d * d)
            })
            .sum();
        v.max(0.0)
    }

    /// Table of exact `R̄(s, a)`, row-major by state.
    pub fn mean_reward_table(&self) -> Vec<f64> {
        (0..self.n_states)
            .flat_map(|s| (0..self.n_actions).map(move |a| (s, a)))
            .map(|(s, a)| self.mean_reward(s, a))
            .collect()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw_index(&self.initial_cdf, rng.random::<f64>())
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let k = (s * self.n_actions + a) * self.n_states;
        draw_index(&self.cumulative[k..k + self.n_states], rng.random::<f64>())
    }

    /// Draws `s'` then the reward, in that order.
    pub fn step<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> Result<(f64, usize)> {
        if a >= self.n_actions {
            return Err(Error::InvalidAction { state: s, action: a, n_actions: self.n_actions });
        }
        let next = self.sample_next(s, a, rng);
        let r = self.reward.sample(s, a, next, rng);
        Ok((r, next))
    }
}

/// Rolls out `policy` from a state drawn from the initial distribution.
///
/// Stops at a terminal state, at the MDP's horizon (both `terminated`), or
/// after `max_steps` transitions (truncated).
pub fn sample_episode<R, P>(
    mdp: &TabularMdp,
    policy: P,
    max_steps: usize,
    rng: &mut R,
) -> Result<Episode>
where
    R: Rng,
    P: FnMut(usize, &mut R) -> usize,
{
    let start = mdp.sample_initial(rng);
    sample_episode_from(mdp, start, policy, max_steps, rng)
}

pub fn sample_episode_from<R, P>(
    mdp: &TabularMdp,
    start: usize,
    mut policy: P,
    max_steps: usize,
    rng: &mut R,
) -> Result<Episode>
where
    R: Rng,
    P: FnMut(usize, &mut R) -> usize,
{
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }
    let cap = mdp.horizon.map_or(max_steps, |h| h.min(max_steps));
    let mut transitions = Vec::with_capacity(cap.min(1024));
    let mut s = start;
    let mut terminated = false;
    loop {
        if mdp.is_terminal(s) {
            terminated = true;
            break;
        }
        if mdp.horizon == Some(transitions.len()) {
            terminated = true;
            break;
        }
        if transitions.len() == max_steps {
            break;
        }
        let a = policy(s, rng);
        let (reward, next) = mdp.step(s, a, rng)?;
        transitions.push(Transition { state: s, action: a, reward, next_state: next });
        s = next;
    }
    Ok(Episode { start_state: start, transitions, terminated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn absorbing() -> TabularMdp {
        let reward = Arc::new(TableReward::new(1, 2, vec![0.0, 0.0]).unwrap());
        MdpBuilder::new(vec![vec![vec![1.0], vec![1.0]]], reward)
            .terminal(vec![0])
            .build()
            .unwrap()
    }

    fn two_state() -> TabularMdp {
        let reward =
            Arc::new(TableReward::from_state_action(2, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let row = vec![0.5, 0.5];
        MdpBuilder::new(vec![vec![row.clone(), row.clone()], vec![row.clone(), row]], reward)
            .horizon(5)
            .build()
            .unwrap()
    }

    #[test]
    fn absorbing_start_gives_empty_terminated_episode() {
        let mdp = absorbing();
        let ep = sample_episode(&mdp, |_, _| 1, 10, &mut stream(1, &[])).unwrap();
        assert!(ep.terminated);
        assert!(ep.len() <= 1);
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let mdp = two_state();
        let err = sample_episode(&mdp, |_, _| 7, 10, &mut stream(1, &[])).unwrap_err();
        assert!(matches!(err, Error::InvalidAction { action: 7, .. }));
    }

    #[test]
    fn horizon_and_step_cap() {
        let mdp = two_state();
        let ep = sample_episode(&mdp, |_, _| 0, 100, &mut stream(2, &[])).unwrap();
        assert_eq!(ep.len(), 5);
        assert!(ep.terminated);
        let ep = sample_episode(&mdp, |_, _| 0, 3, &mut stream(2, &[])).unwrap();
        assert_eq!(ep.len(), 3);
        assert!(!ep.terminated);
        ep.validate().unwrap();
    }

    #[test]
    fn identical_seeds_give_identical_episodes() {
        let mdp = two_state();
        let policy = |_: usize, r: &mut crate::rng::StreamRng| r.random_range(0..2);
        let a = sample_episode(&mdp, policy, 50, &mut stream(9, &[4])).unwrap();
        let b = sample_episode(&mdp, policy, 50, &mut stream(9, &[4])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_rows_fail_validation() {
        let reward = Arc::new(TableReward::new(2, 1, vec![0.0; 4]).unwrap());
        let err = MdpBuilder::new(vec![vec![vec![0.6, 0.5]], vec![vec![0.5, 0.5]]], reward.clone())
            .horizon(3)
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = MdpBuilder::new(vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]], reward)
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("gamma = 1"));
    }

    #[test]
    fn conditional_moments_mix_next_state_randomness() {
        // R(s, a, s') = s' on a fair coin: mean 0.5, variance 0.25.
        let reward = Arc::new(TableReward::new(2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap());
        let row = vec![0.5, 0.5];
        let mdp = MdpBuilder::new(vec![vec![row.clone()], vec![row]], reward)
            .average_reward()
            .build()
            .unwrap();
        assert_eq!(mdp.mean_reward(0, 0), 0.5);
        assert_eq!(mdp.reward_variance(1, 0), 0.25);
    }
}
