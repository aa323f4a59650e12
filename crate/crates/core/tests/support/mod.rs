//! Risk-neutral reference learners, written from scratch against the public
//! environment API, plus checks that the risk-adjusted learners at β = 0
//! reproduce them bit for bit on shared streams.

#![allow(dead_code)]

use std::sync::Arc;

use chaotic_rl::env::{GridWorldConfig, RegimeSwitchConfig};
use chaotic_rl::estimator::RewardMeanEstimator;
use chaotic_rl::mdp::{MdpBuilder, RewardModel, TabularMdp, Transition};
use chaotic_rl::pg::{
    cmv_reinforce_iteration, cvar_pg_iteration, generate_batch, train_actor_critic,
    ActorCriticConfig, BatchContext, CvarState, SoftmaxPolicy, TimescaleSchedule,
};
use chaotic_rl::rng::stream;
use chaotic_rl::value::{train_cmv_q, LearningSchedule};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

fn first_above(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn reference_q_learning(mdp: &TabularMdp, sched: &LearningSchedule, seed: u64) -> Vec<Vec<f64>> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut q = vec![vec![0.0f64; na]; ns];
    let mut n = vec![vec![0u64; na]; ns];
    let value = |q: &Vec<Vec<f64>>, s: usize| {
        if mdp.is_terminal(s) {
            0.0
        } else {
            q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let greedy = |row: &[f64]| {
        let mut best = 0;
        for (a, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = a;
            }
        }
        best
    };
    let cap = mdp.horizon().unwrap_or(sched.max_episode_steps);
    let (mut steps, mut episode) = (0u64, 0u64);
    while steps < sched.n_steps {
        let mut rng = stream(seed, &[episode]);
        let mut s = mdp.sample_initial(&mut rng);
        let mut t = 0;
        while !mdp.is_terminal(s) && t < cap && steps < sched.n_steps {
            let a = if rng.random::<f64>() < sched.epsilon {
                rng.random_range(0..na)
            } else {
                greedy(&q[s])
            };
            let (r, next) = mdp.step(s, a, &mut rng).unwrap();
            n[s][a] += 1;
            let alpha = sched.alpha.at(n[s][a]);
            let end = mdp.is_terminal(next) || mdp.horizon() == Some(t + 1);
            let boot = if end { 0.0 } else { value(&q, next) };
            q[s][a] = (1.0 - alpha) * q[s][a] + alpha * (r + boot);
            s = next;
            t += 1;
            steps += 1;
        }
        episode += 1;
    }
    q
}


/// Plain REINFORCE with reward-to-go weights, accumulated per state.
fn reference_reinforce_step(policy: &SoftmaxPolicy, episodes: &[chaotic_rl::mdp::Episode], alpha: f64, gamma: f64) -> Vec<f64> {
    let na = policy.n_actions();
    let mut grad = vec![0.0; policy.theta().len()];
    let mut per_state = vec![0.0; policy.n_states()];
    for ep in episodes {
        let mut g = 0.0;
        for tr in ep.transitions.iter().rev() {
            g = tr.reward + gamma * g;
            grad[tr.state * na + tr.action] += g;
            per_state[tr.state] += g;
        }
    }
    for (s, w) in per_state.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (k, p) in policy.probs(s).iter().enumerate() {
            grad[s * na + k] -= p * w;
        }
    }
    let b = episodes.len() as f64;
    let mut theta = policy.theta().to_vec();
    for (t, g) in theta.iter_mut().zip(&grad) {
        *t += alpha * (g / b);
    }
    theta
}



#[derive(Debug)]
pub struct NoisyTable {
    pub means: Vec<f64>,
    pub sd: f64,
    pub n_actions: usize,
}

impl RewardModel for NoisyTable {
    fn sample(&self, s: usize, a: usize, _: usize, rng: &mut dyn RngCore) -> f64 {
        let h: f64 = rand::Rng::sample(rng, StandardNormal);
        self.means[s * self.n_actions + a] + self.sd * h
    }
    fn mean(&self, s: usize, a: usize, _: usize) -> f64 {
        self.means[s * self.n_actions + a]
    }
    fn variance(&self, _: usize, _: usize, _: usize) -> f64 {
        self.sd * self.sd
    }
    fn bound(&self) -> f64 {
        10.0 + 10.0 * self.sd
    }
}

pub fn continuing_chain() -> TabularMdp {
    let reward = NoisyTable { means: vec![1.0, 0.0, -1.0, 2.0], sd: 0.7, n_actions: 2 };
    MdpBuilder::new(
        vec![vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0.5, 0.5], vec![0.3, 0.7]]],
        Arc::new(reward),
    )
    .average_reward()
    .build()
    .unwrap()
}

struct ReferenceActorCritic {
    theta: Vec<f64>,
    v: Vec<f64>,
    rho: f64,
    na: usize,
}

impl ReferenceActorCritic {
    fn act(&self, s: usize, rng: &mut impl Rng) -> usize {
        let policy = SoftmaxPolicy::from_theta(self.v.len(), self.na, self.theta.clone());
        let mut acc = 0.0;
        let cdf: Vec<f64> = policy
            .probs(s)
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        first_above(&cdf, rng.random::<f64>())
    }

    fn update(&mut self, tr: &Transition, delta: f64, a1: f64, a2: f64) {
        self.v[tr.state] += a2 * delta;
        let policy = SoftmaxPolicy::from_theta(self.v.len(), self.na, self.theta.clone());
        let probs = policy.probs(tr.state);
        for (k, p) in probs.iter().enumerate() {
            let score = if k == tr.action { 1.0 - p } else { -p };
            self.theta[tr.state * self.na + k] += a1 * (score * delta);
        }
    }
}




fn same_bits(what: &str, a: &[f64], b: &[f64]) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{what}: lengths {} and {}", a.len(), b.len()));
    }
    match a.iter().zip(b).position(|(x, y)| x.to_bits() != y.to_bits()) {
        None => Ok(()),
        Some(i) => Err(format!("{what}: entry {i} is {} vs reference {}", a[i], b[i])),
    }
}

/// Risk-adjusted Q-learning at β = 0 against textbook Q-learning on the toy
/// and the grid.
pub fn check_q_learning(n_steps: u64, seed: u64) -> Result<(), String> {
    let sched = LearningSchedule { n_steps, ..Default::default() };
    for mdp in [
        RegimeSwitchConfig::toy(0.16, 10).build_mdp().unwrap(),
        GridWorldConfig::default().build_mdp().unwrap(),
    ] {
        let (q, _) = train_cmv_q(&mdp, &sched, 0.0, seed).map_err(|e| e.to_string())?;
        let reference = reference_q_learning(&mdp, &sched, seed);
        same_bits("Q table", &q.to_rows().concat(), &reference.concat())?;
    }
    Ok(())
}

/// The chaotic mean-variance gradient step at β = 0 against plain REINFORCE.
pub fn check_reinforce(iterations: u64, seed: u64) -> Result<(), String> {
    let mdp = RegimeSwitchConfig::toy(0.5, 6).build_mdp().unwrap();
    let mut policy = SoftmaxPolicy::new(2, 2);
    let mut est = RewardMeanEstimator::tabular(2, 2);
    for iteration in 0..iterations {
        let ctx = BatchContext { seed, iteration, max_steps: 100 };
        let episodes = generate_batch(&mdp, &policy.tables(), 64, &ctx).map_err(|e| e.to_string())?;
        let expected = reference_reinforce_step(&policy, &episodes, 0.1, 1.0);
        cmv_reinforce_iteration(&mut policy, &mdp, &mut est, 64, 0.0, 0.1, &ctx).map_err(|e| e.to_string())?;
        same_bits(&format!("θ after iteration {iteration}"), policy.theta(), &expected)?;
    }
    Ok(())
}

/// The CVaR step with a threshold no return can reach against plain REINFORCE.
pub fn check_cvar_dead_indicator(iterations: u64, seed: u64) -> Result<(), String> {
    let mdp = RegimeSwitchConfig::toy(0.5, 6).build_mdp().unwrap();
    let mut policy = SoftmaxPolicy::new(2, 2);
    let mut est = RewardMeanEstimator::tabular(2, 2);
    let sched = TimescaleSchedule::constant(0.1, 1e-9, 1e-9);
    let mut state = CvarState::new(1e12, 0.9).unwrap();
    for iteration in 0..iterations {
        let ctx = BatchContext { seed, iteration, max_steps: 100 };
        let episodes = generate_batch(&mdp, &policy.tables(), 64, &ctx).map_err(|e| e.to_string())?;
        let expected = reference_reinforce_step(&policy, &episodes, 0.1, 1.0);
        cvar_pg_iteration(&mut policy, &mdp, &mut est, 64, &sched, &mut state, &ctx)
            .map_err(|e| e.to_string())?;
        same_bits(&format!("θ after iteration {iteration}"), policy.theta(), &expected)?;
    }
    Ok(())
}

/// Episodic actor-critic at β = 0 against one-step advantage actor-critic.
pub fn check_episodic_actor_critic(n_steps: u64, seed: u64) -> Result<(), String> {
    let horizon = 8;
    let mdp = RegimeSwitchConfig::toy(0.4, horizon).build_mdp().unwrap();
    let config = ActorCriticConfig { n_steps, ..Default::default() };
    let out = train_actor_critic(&mdp, &config, 0.0, seed).map_err(|e| e.to_string())?;

    let mut r = ReferenceActorCritic { theta: vec![0.0; 4], v: vec![0.0; 2], rho: 0.0, na: 2 };
    let (mut n, mut episode) = (0u64, 0u64);
    while n < config.n_steps {
        let mut rng = stream(seed, &[episode]);
        let mut s = mdp.sample_initial(&mut rng);
        let mut t = 0;
        while n < config.n_steps && t < horizon {
            let a = r.act(s, &mut rng);
            let (reward, next) = mdp.step(s, a, &mut rng).unwrap();
            n += 1;
            t += 1;
            let next_v = if t == horizon { 0.0 } else { r.v[next] };
            let delta = reward + next_v - r.v[s];
            let (a1, a2, _) = config.schedule.at(n);
            r.update(&Transition { state: s, action: a, reward, next_state: next }, delta, a1, a2);
            s = next;
        }
        episode += 1;
    }
    same_bits("policy parameters", out.policy.theta(), &r.theta)?;
    same_bits("critic weights", &out.critics.lambda1, &r.v)
}

/// Average-reward actor-critic at β = 0 against its risk-neutral form on a
/// continuing chain with noisy rewards.
pub fn check_average_actor_critic(n_steps: u64, seed: u64) -> Result<(), String> {
    let mdp = continuing_chain();
    let config = ActorCriticConfig { n_steps, ..Default::default() };
    let out = train_actor_critic(&mdp, &config, 0.0, seed).map_err(|e| e.to_string())?;

    let mut r = ReferenceActorCritic { theta: vec![0.0; 4], v: vec![0.0; 2], rho: 0.0, na: 2 };
    let mut rng = stream(seed, &[0]);
    let mut s = mdp.sample_initial(&mut rng);
    for n in 1..=config.n_steps {
        let a = r.act(s, &mut rng);
        let (reward, next) = mdp.step(s, a, &mut rng).unwrap();
        let (a1, a2, a3) = config.schedule.at(n);
        r.rho = (1.0 - a3) * r.rho + a3 * reward;
        let delta = reward - r.rho + r.v[next] - r.v[s];
        r.update(&Transition { state: s, action: a, reward, next_state: next }, delta, a1, a2);
        s = next;
    }
    same_bits("policy parameters", out.policy.theta(), &r.theta)?;
    same_bits("critic weights", &out.critics.lambda1, &r.v)?;
    same_bits("average reward", &[out.average.unwrap().rho], &[r.rho])
}

/// Two live states and an absorbing terminal one. Each action ends the episode
/// with a different probability, so episode length depends on the policy.
pub fn terminating_chain() -> TabularMdp {
    let reward = NoisyTable { means: vec![1.0, -0.5, 0.5, 2.0, 0.0, 0.0], sd: 0.5, n_actions: 2 };
    MdpBuilder::new(
        vec![
            vec![vec![0.8, 0.0, 0.2], vec![0.0, 0.5, 0.5]],
            vec![vec![0.0, 0.7, 0.3], vec![0.6, 0.0, 0.4]],
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
        ],
        Arc::new(reward),
    )
    .terminal(vec![2])
    .start_state(0)
    .build()
    .unwrap()
}
