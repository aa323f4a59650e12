//! Policy-gradient methods for softmax policies over one-hot features.
//!
//! Monte-Carlo estimators ([`cmv_reinforce_iteration`], [`mv_reinforce_iteration`],
//! [`sharpe_pg_iteration`], [`cvar_pg_iteration`]) work on batches of episodes
//! generated in parallel. Each episode draws from the stream
//! `(seed, iteration, episode)` and gradients are reduced in episode order, so
//! results do not depend on the number of threads. The online actor-critics
//! ([`actor_critic_step_episodic`], [`actor_critic_step_average`]) update after
//! every transition.

mod actor_critic;
mod batch;
mod cvar;
mod log;
mod policy;
mod reinforce;
mod sharpe;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::value::StepSize;

pub use actor_critic::{
    actor_critic_step_average, actor_critic_step_episodic, train_actor_critic, ActorCriticConfig,
    ActorCriticOutcome, CriticParams, StateFeatures, TdErrors,
};
pub use batch::{generate_batch, BatchContext};
pub use cvar::{cvar_pg_iteration, CvarState};
pub use log::{write_training_log, IterationLog};
pub use policy::{policy_sample_and_grad, PolicyTables, SoftmaxPolicy};
pub use reinforce::{
    cmv_gradient, cmv_reinforce_iteration, mv_gradient, mv_reinforce_iteration, optimal_baseline,
};
pub use sharpe::{sharpe_direction, sharpe_pg_iteration, SharpeMode, SharpeState, SharpeStatus};
pub use train::{train_policy_gradient, PgAlgorithm, PgConfig, PgOutcome};

/// Step sizes of the slow (policy), middle (critic or tracking) and fast
/// (average) recursions, indexed by iteration or step number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimescaleSchedule {
    pub alpha1: StepSize,
    pub alpha2: StepSize,
    pub alpha3: StepSize,
}

impl Default for TimescaleSchedule {
    fn default() -> Self {
        Self {
            alpha1: StepSize::PowerLaw { exponent: 0.9 },
            alpha2: StepSize::PowerLaw { exponent: 0.7 },
            alpha3: StepSize::PowerLaw { exponent: 0.55 },
        }
    }
}

impl TimescaleSchedule {
    /// Same constant step on every timescale.
    pub fn constant(alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        Self {
            alpha1: StepSize::Constant { value: alpha1 },
            alpha2: StepSize::Constant { value: alpha2 },
            alpha3: StepSize::Constant { value: alpha3 },
        }
    }

    pub fn at(&self, n: u64) -> (f64, f64, f64) {
        (self.alpha1.at(n), self.alpha2.at(n), self.alpha3.at(n))
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha1.validate()?;
        self.alpha2.validate()?;
        self.alpha3.validate()
    }
}

/// Batch gradient with the per-episode statistics it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    pub batch_size: usize,
    /// Discounted return `Σ γ^t R_{t+1}` of each episode.
    pub returns: Vec<f64>,
    /// Realised chaotic quadratic variation `Σ γ^{2t} (R_{t+1} − R̂)²` of each episode.
    pub quadratic_variations: Vec<f64>,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn mean_return(&self) -> f64 {
        crate::diagnostics::mean(&self.returns)
    }

    pub fn mean_quadratic_variation(&self) -> f64 {
        crate::diagnostics::mean(&self.quadratic_variations)
    }
}

/// `θ += step · direction`.
pub(crate) fn ascend(policy: &mut SoftmaxPolicy, step: f64, direction: &[f64]) {
    for (t, d) in policy.theta_mut().iter_mut().zip(direction) {
        *t += step * d;
    }
}
