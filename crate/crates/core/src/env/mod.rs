//! The three experimental environments and their analytic oracles.
//!
//! * [`regime`]: state-switching toy with a noisy "risky" action.
//! * [`grid`]: slippery grid world with penalty cells.
//! * [`portfolio`]: two-asset investment problem with volatility regimes.

pub mod grid;
pub mod portfolio;
pub mod regime;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::TabularMdp;

pub use grid::GridWorldConfig;
pub use portfolio::PortfolioConfig;
pub use regime::RegimeSwitchConfig;

/// Zero-mean, unit-variance law of the hidden reward noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDist {
    #[default]
    StandardNormal,
    /// ±1 with equal probability.
    Rademacher,
}

impl NoiseDist {
    pub fn sample(self, rng: &mut dyn RngCore) -> f64 {
        match self {
            NoiseDist::StandardNormal => StandardNormal.sample(rng),
            NoiseDist::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Largest magnitude used when declaring reward bounds.
    pub(crate) fn bound(self) -> f64 {
        match self {
            NoiseDist::StandardNormal => 10.0,
            NoiseDist::Rademacher => 1.0,
        }
    }
}

/// Any of the three environment configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvConfig {
    Regime(RegimeSwitchConfig),
    Grid(GridWorldConfig),
    Portfolio(PortfolioConfig),
}

impl EnvConfig {
    pub fn build_mdp(&self) -> Result<TabularMdp> {
        match self {
            EnvConfig::Regime(c) => c.build_mdp(),
            EnvConfig::Grid(c) => c.build_mdp(),
            EnvConfig::Portfolio(c) => c.build_mdp(),
        }
    }

    /// Cap on episode length used when sampling.
    pub fn max_steps(&self) -> usize {
        match self {
            EnvConfig::Regime(c) => c.horizon,
            EnvConfig::Grid(c) => c.max_steps,
            EnvConfig::Portfolio(c) => c.horizon,
        }
    }
}
