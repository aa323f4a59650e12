//! Value-based learning with the modified reward
//! `R − (β/2)(R − R̄(s, a))²`.
//!
//! [`train_cmv_q`] handles episodic problems with `γ = 1`; [`train_cmv_r`]
//! handles continuing problems under the average-reward criterion.
//! [`modified_reward_value_iteration`] is the exact planning counterpart used
//! as an oracle for both.

mod q_learning;
mod r_learning;
mod vi;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub use q_learning::{cmv_q_step, train_cmv_q};
pub use r_learning::{cmv_r_step, train_cmv_r, AverageRewardState, RLearningSchedule};
pub use vi::{modified_reward_value_iteration, ValueIterationResult};

/// Per-`(state, action)` table of risk-adjusted action values.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
    beta: f64,
    gamma: f64,
    terminal: Vec<bool>,
}

impl QTable {
    /// Zero table shaped after `mdp`, remembering its terminal states.
    pub fn new(mdp: &TabularMdp, beta: f64) -> Self {
        Self {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            q: vec![0.0; mdp.n_states() * mdp.n_actions()],
            beta,
            gamma: mdp.gamma(),
            terminal: (0..mdp.n_states()).map(|s| mdp.is_terminal(s)).collect(),
        }
    }

    /// Table from explicit rows, without terminal states and with `γ = 1`.
    pub fn from_rows(rows: &[Vec<f64>], beta: f64) -> Self {
        let n_actions = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_actions), "rows must have equal length");
        Self {
            n_states: rows.len(),
            n_actions,
            q: rows.concat(),
            beta,
            gamma: 1.0,
            terminal: vec![false; rows.len()],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub(crate) fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// `max_a Q(s, a)`, zero at terminal states.
    pub fn max(&self, s: usize) -> f64 {
        if self.terminal[s] {
            return 0.0;
        }
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First maximising action of state `s`.
    pub fn argmax(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.n_actions).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn check_episodic(&self) -> Result<()> {
        if self.gamma < 1.0 {
            return Err(Error::Unsupported(
                "risk-adjusted Q-learning needs the undiscounted episodic setting".into(),
            ));
        }
        Ok(())
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Deterministic greedy policy, one action per state.
pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.n_states()).map(|s| q.argmax(s)).collect()
}

/// Step-size rule applied to a visit count or step counter `n ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StepSize {
    /// `n^(−exponent)`.
    PowerLaw { exponent: f64 },
    Constant { value: f64 },
}

impl StepSize {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            StepSize::PowerLaw { exponent } => (n.max(1) as f64).powf(-exponent),
            StepSize::Constant { value } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSize::PowerLaw { exponent } if exponent >= 0.0 && exponent.is_finite() => Ok(()),
            StepSize::Constant { value } if value > 0.0 && value <= 1.0 => Ok(()),
            other => Err(Error::Config(format!("step size {other:?} leaves (0, 1]"))),
        }
    }
}

/// Exploration and step-size settings for the tabular learners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningSchedule {
    /// Step size as a function of the visit count of the updated pair.
    pub alpha: StepSize,
    pub epsilon: f64,
    pub n_steps: u64,
    /// Truncation length of training episodes without a horizon.
    pub max_episode_steps: usize,
}

impl Default for LearningSchedule {
    fn default() -> Self {
        Self {
            alpha: StepSize::PowerLaw { exponent: 0.5 },
            epsilon: 0.1,
            n_steps: 500_000,
            max_episode_steps: 500,
        }
    }
}

impl LearningSchedule {
    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::Config("max_episode_steps must be positive".into()));
        }
        Ok(())
    }
}

/// ε-greedy draw: one uniform decides exploration, a second picks the random
/// action when exploring.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q.n_actions())
    } else {
        q.argmax(s)
    }
}
