//! Two-asset investment problem with three volatility regimes.
//!
//! In state `s` an action `(q_rf, q_r)` earns `q_rf μ(s) + q_r (μ(s) + σ(s) h)`
//! with standard normal `h`. The next regime depends only on the risky
//! quantity: the more is put at risk, the likelier the high-volatility state.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::NoiseDist;
use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, RewardModel, TabularMdp};

pub const LOW_VOL: usize = 0;
pub const MEDIUM_VOL: usize = 1;
pub const HIGH_VOL: usize = 2;
pub const STATE_NAMES: [&str; 3] = ["LowVol", "MediumVol", "HighVol"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PortfolioConfig {
    /// Risk-free rate per state.
    pub mu: [f64; 3],
    /// Volatility per state.
    pub sigma: [f64; 3],
    /// Total budget shared by both assets.
    pub q_max: usize,
    pub horizon: usize,
    /// Fixed start state; uniform over the three states when absent.
    pub start_state: Option<usize>,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self {
            mu: [0.2, 0.6, 1.0],
            sigma: [0.5, 1.0, 1.5],
            q_max: 5,
            horizon: 20,
            start_state: Some(LOW_VOL),
        }
    }
}

/// Enumerates `(q_rf, q_r)` by total invested, then by risky quantity.
pub fn action_table(q_max: usize) -> Vec<(usize, usize)> {
    (0..=q_max).flat_map(|total| (0..=total).map(move |qr| (total - qr, qr))).collect()
}

impl PortfolioConfig {
    pub fn actions(&self) -> Vec<(usize, usize)> {
        action_table(self.q_max)
    }

    pub fn n_actions(&self) -> usize {
        (self.q_max + 1) * (self.q_max + 2) / 2
    }

    /// Next-state distribution for a given risky quantity.
    pub fn transition_row(&self, q_r: usize) -> [f64; 3] {
        if q_r == 0 {
            [0.5, 0.45, 0.05]
        } else if q_r <= 2 {
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
        } else if q_r < self.q_max {
            [0.1, 0.45, 0.45]
        } else {
            [0.05, 0.25, 0.7]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_max == 0 {
            return Err(Error::Validation("q_max must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0)) || self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("mu must be finite and sigma nonnegative".into()));
        }
        if matches!(self.start_state, Some(s) if s >= 3) {
            return Err(Error::Validation("start state must be 0, 1 or 2".into()));
        }
        Ok(())
    }

    pub fn build_mdp(&self) -> Result<TabularMdp> {
        self.validate()?;
        let actions = self.actions();
        let transition: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| actions.iter().map(|&(_, qr)| self.transition_row(qr).to_vec()).collect())
            .collect();
        let reward = PortfolioReward {
            mu: self.mu,
            sigma: self.sigma,
            actions,
            noise: NoiseDist::StandardNormal,
            q_max: self.q_max as f64,
        };
        let builder = MdpBuilder::new(transition, Arc::new(reward)).horizon(self.horizon);
        let builder = match self.start_state {
            Some(s) => builder.start_state(s),
            None => builder.initial(vec![1.0 / 3.0; 3]),
        };
        builder.build()
    }
}

#[derive(Clone, Debug)]
struct PortfolioReward {
    mu: [f64; 3],
    sigma: [f64; 3],
    actions: Vec<(usize, usize)>,
    noise: NoiseDist,
    q_max: f64,
}

impl RewardModel for PortfolioReward {
    fn sample(&self, s: usize, a: usize, _next: usize, rng: &mut dyn RngCore) -> f64 {
        let (qrf, qr) = self.actions[a];
        if qr == 0 {
            return qrf as f64 * self.mu[s];
        }
        let h = self.noise.sample(rng);
        qrf as f64 * self.mu[s] + qr as f64 * (self.mu[s] + self.sigma[s] * h)
    }

    fn mean(&self, s: usize, a: usize, _next: usize) -> f64 {
        let (qrf, qr) = self.actions[a];
        (qrf + qr) as f64 * self.mu[s]
    }

    fn variance(&self, s: usize, a: usize, _next: usize) -> f64 {
        let qr = self.actions[a].1 as f64;
        qr * qr * self.sigma[s] * self.sigma[s]
    }

    fn bound(&self) -> f64 {
        let m = self.mu.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let s = self.sigma.iter().fold(0.0f64, |a, b| a.max(*b));
        self.q_max * (m + self.noise.bound() * s)
    }
}
