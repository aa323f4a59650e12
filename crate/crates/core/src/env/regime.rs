//! Regime-switching toy problem.
//!
//! The next state is drawn from `p` regardless of the current state and
//! action. Action 0 pays the constant `mu[n]` in state `n`; action 1 pays
//! `mu[n] + kappa[n] + sigma[n] h` with fresh zero-mean unit-variance noise `h`.
//! With `mu = (2, 10)`, `kappa = (2, −2)` and `p = (½, ½)` both constant
//! policies earn 6 per step on average, but only action 1 carries reward noise.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::NoiseDist;
use crate::error::{Error, Result};
use crate::mdp::{check_distribution, MdpBuilder, RewardModel, TabularMdp};

/// Index of the noisy action.
pub const RISKY_ACTION: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitchConfig {
    /// Distribution of every state, including the initial one.
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    pub sigma: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub noise: NoiseDist,
}

impl RegimeSwitchConfig {
    /// Two equiprobable states with `mu = (2, 10)` and `kappa = (2, −2)`.
    pub fn toy(sigma: f64, horizon: usize) -> Self {
        Self {
            p: vec![0.5, 0.5],
            mu: vec![2.0, 10.0],
            kappa: vec![2.0, -2.0],
            sigma: vec![sigma, sigma],
            horizon,
            noise: NoiseDist::StandardNormal,
        }
    }

    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.len();
        if n == 0 {
            return Err(Error::Validation("regime model needs at least one state".into()));
        }
        if self.mu.len() != n || self.kappa.len() != n || self.sigma.len() != n {
            return Err(Error::Validation("p, mu, kappa and sigma must have equal length".into()));
        }
        check_distribution(&self.p).map_err(|e| Error::Validation(format!("p: {e}")))?;
        if self.sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Validation("sigma must be finite and nonnegative".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn build_mdp(&self) -> Result<TabularMdp> {
        self.validate()?;
        let n = self.n_states();
        let transition = vec![vec![self.p.clone(); 2]; n];
        let reward = RegimeReward {
            mu: self.mu.clone(),
            kappa: self.kappa.clone(),
            sigma: self.sigma.clone(),
            noise: self.noise,
        };
        MdpBuilder::new(transition, Arc::new(reward))
            .initial(self.p.clone())
            .horizon(self.horizon)
            .build()
    }
}

#[derive(Clone, Debug)]
struct RegimeReward {
    mu: Vec<f64>,
    kappa: Vec<f64>,
    sigma: Vec<f64>,
    noise: NoiseDist,
}

impl RewardModel for RegimeReward {
    fn sample(&self, s: usize, a: usize, _next: usize, rng: &mut dyn RngCore) -> f64 {
        if a == RISKY_ACTION {
            self.mu[s] + (self.kappa[s] + self.sigma[s] * self.noise.sample(rng))
        } else {
            self.mu[s]
        }
    }

    fn mean(&self, s: usize, a: usize, _next: usize) -> f64 {
        if a == RISKY_ACTION {
            self.mu[s] + self.kappa[s]
        } else {
            self.mu[s]
        }
    }

    fn variance(&self, s: usize, a: usize, _next: usize) -> f64 {
        if a == RISKY_ACTION {
            self.sigma[s] * self.sigma[s]
        } else {
            0.0
        }
    }

    fn bound(&self) -> f64 {
        (0..self.mu.len())
            .map(|n| {
                self.mu[n].abs().max((self.mu[n] + self.kappa[n]).abs())
                    + self.noise.bound() * self.sigma[n]
            })
            .fold(0.0, f64::max)
    }
}

/// Chaotic variance `(β/2) T Σ_n σ_n² p_n π(n)` of the policy that takes the
/// noisy action with probability `risky_probs[n]` in state `n`.
pub fn closed_form_chaotic_variance(
    config: &RegimeSwitchConfig,
    risky_probs: &[f64],
    beta: f64,
) -> Result<f64> {
    config.validate()?;
    if risky_probs.len() != config.n_states() {
        return Err(Error::Config("one action probability per state required".into()));
    }
    let per_step: f64 = (0..config.n_states())
        .map(|n| config.sigma[n] * config.sigma[n] * config.p[n] * risky_probs[n])
        .sum();
    Ok(0.5 * beta * config.horizon as f64 * per_step)
}

/// Tolerance on `Σ p_n κ_n = 0` for the variance-gap oracle.
pub const BALANCE_TOL: f64 = 1e-12;

/// `Var[always noisy] − Var[always quiet]` of the undiscounted episode reward,
/// `T Σ_n p_n (κ_n² + 2 μ_n κ_n + σ_n²)`, valid when `Σ p_n κ_n = 0`.
pub fn closed_form_variance_gap(config: &RegimeSwitchConfig) -> Result<f64> {
    config.validate()?;
    let balance: f64 = config.p.iter().zip(&config.kappa).map(|(p, k)| p * k).sum();
    if balance.abs() > BALANCE_TOL {
        return Err(Error::Config(format!(
            "variance gap needs Σ p κ = 0, got {balance}"
        )));
    }
    let per_step: f64 = (0..config.n_states())
        .map(|n| {
            let (m, k, s) = (config.mu[n], config.kappa[n], config.sigma[n]);
            config.p[n] * (k * k + 2.0 * m * k + s * s)
        })
        .sum();
    Ok(config.horizon as f64 * per_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::sample_episode;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn quiet_policy_has_no_chaotic_variance() {
        let c = RegimeSwitchConfig::toy(0.16, 400);
        assert_eq!(closed_form_chaotic_variance(&c, &[0.0, 0.0], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn toy_chaotic_variance_value() {
        let c = RegimeSwitchConfig::toy(0.16, 400);
        let v = closed_form_chaotic_variance(&c, &[1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(v, 5.12, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_config_has_no_chaotic_variance() {
        let c = RegimeSwitchConfig::toy(0.0, 50);
        for probs in [[0.0, 1.0], [0.3, 0.9], [1.0, 1.0]] {
            assert_eq!(closed_form_chaotic_variance(&c, &probs, 7.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn toy_variance_gap_value() {
        let c = RegimeSwitchConfig::toy(0.16, 400);
        assert_relative_eq!(closed_form_variance_gap(&c).unwrap(), -4789.76, max_relative = 1e-12);
    }

    #[test]
    fn gap_vanishes_at_constructed_root() {
        // The toy has Σ p (κ² + 2μκ) = −12, so σ² = 12 cancels it.
        let mut c = RegimeSwitchConfig::toy(0.0, 10);
        let s = 12.0f64.sqrt();
        c.sigma = vec![s, s];
        assert!(closed_form_variance_gap(&c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gap_matches_two_state_parametrisation() {
        let (delta, eps, mu1, s1, s2, t) = (3.0, 0.4, 1.5, 0.7, 0.2, 17usize);
        let c = RegimeSwitchConfig {
            p: vec![0.5, 0.5],
            mu: vec![mu1, mu1 + delta],
            kappa: vec![delta * eps, -delta * eps],
            sigma: vec![s1, s2],
            horizon: t,
            noise: NoiseDist::StandardNormal,
        };
        let expected = t as f64
            * delta
            * delta
            * (eps * eps - eps + (s1 * s1 + s2 * s2) / (2.0 * delta * delta));
        assert_relative_eq!(closed_form_variance_gap(&c).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn unbalanced_offsets_rejected() {
        let mut c = RegimeSwitchConfig::toy(0.1, 10);
        c.kappa = vec![1.0, 0.0];
        assert!(matches!(closed_form_variance_gap(&c), Err(Error::Config(_))));
    }

    #[test]
    fn quiet_policy_rewards_are_two_or_ten() {
        let mdp = RegimeSwitchConfig::toy(0.16, 400).build_mdp().unwrap();
        for seed in 0..5 {
            let ep = sample_episode(&mdp, |_, _| 0, 1000, &mut stream(seed, &[])).unwrap();
            assert_eq!(ep.len(), 400);
            assert!(ep.terminated);
            assert!(ep.rewards().all(|r| r == 2.0 || r == 10.0));
        }
    }

    #[test]
    fn exact_moments() {
        let mdp = RegimeSwitchConfig::toy(0.16, 4).build_mdp().unwrap();
        assert_eq!(mdp.mean_reward(0, 1), 4.0);
        assert_eq!(mdp.mean_reward(1, 1), 8.0);
        assert_relative_eq!(mdp.reward_variance(1, 1), 0.0256, max_relative = 1e-12);
        assert_eq!(mdp.reward_variance(1, 0), 0.0);
    }
}
