//! Doob decomposition of a realised cumulative reward.
//!
//! For a trajectory started in `s_t` the discounted reward splits as
//!
//! ```text
//! Σ γ^k R_{t+k+1} = E[Σ γ^k R_{t+k+1} | s_t]
//!                 + Σ γ^k (R̄(s_{t+k}, a_{t+k}) − E[R_{t+k+1} | s_t])   predictable
//!                 + Σ γ^k (R_{t+k+1} − R̄(s_{t+k}, a_{t+k}))           chaotic (martingale)
//! ```
//!
//! The chaotic part vanishes for deterministic rewards. Its predictable quadratic
//! variation `Σ γ^{2k} E[(R − R̄)² | s, a]` is realised per trajectory with the
//! single-sample squared deviations, which is the form the learning algorithms use.

use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::Episode;

#[derive(Clone, Debug, PartialEq)]
pub struct DoobDecomposition {
    /// `E[Σ γ^k R_{t+k+1} | s_t]` implied by the supplied step means.
    pub conditional_start_value: f64,
    /// `γ^k (R̄(s_k, a_k) − E[R_{k+1} | s_0])`.
    pub predictable: Vec<f64>,
    /// `γ^k (R_{k+1} − R̄(s_k, a_k))`.
    pub chaotic: Vec<f64>,
    /// Running `Σ_{j≤k} γ^{2j} (R_{j+1} − R̄(s_j, a_j))²`.
    pub quadratic_variation: Vec<f64>,
}

impl DoobDecomposition {
    pub fn predictable_sum(&self) -> f64 {
        self.predictable.iter().sum()
    }

    pub fn chaotic_sum(&self) -> f64 {
        self.chaotic.iter().sum()
    }

    /// Realised quadratic variation of the chaotic martingale over the episode.
    pub fn total_quadratic_variation(&self) -> f64 {
        self.quadratic_variation.last().copied().unwrap_or(0.0)
    }

    /// The three components summed back together.
    pub fn reconstructed(&self) -> f64 {
        self.conditional_start_value + self.predictable_sum() + self.chaotic_sum()
    }
}

/// Undiscounted chaotic increments `R_{t+1} − R̂(s_t, a_t)`.
pub fn chaotic_increments(episode: &Episode, est: &RewardMeanEstimator) -> Result<Vec<f64>> {
    episode
        .transitions
        .iter()
        .map(|t| est.estimate(t.state, t.action).map(|m| t.reward - m))
        .collect()
}

/// Splits the episode's discounted return into start value, predictable and
/// chaotic components.
///
/// `step_means[k]` is `E[R_{k+1} | s_0]`, the start-state conditional mean of
/// the `k`-th reward (typically a Monte-Carlo average over replicated episodes).
/// The start value is `Σ γ^k step_means[k]`, which makes the reconstruction
/// identity exact up to rounding.
pub fn doob_decompose(
    episode: &Episode,
    est: &RewardMeanEstimator,
    gamma: f64,
    step_means: &[f64],
) -> Result<DoobDecomposition> {
    let n = episode.len();
    if step_means.len() < n {
        return Err(Error::Config(format!(
            "{} step means supplied for an episode of length {n}",
            step_means.len()
        )));
    }
    let mut predictable = Vec::with_capacity(n);
    let mut chaotic = Vec::with_capacity(n);
    let mut quadratic_variation = Vec::with_capacity(n);
    let mut start = 0.0;
    let mut disc = 1.0;
    let mut qv = 0.0;
    for (t, m) in episode.transitions.iter().zip(step_means) {
        let rbar = est.estimate(t.state, t.action)?;
        let dev = t.reward - rbar;
        start += disc * m;
        predictable.push(disc * (rbar - m));
        chaotic.push(disc * dev);
        qv += disc * disc * dev * dev;
        quadratic_variation.push(qv);
        disc *= gamma;
    }
    Ok(DoobDecomposition { conditional_start_value: start, predictable, chaotic, quadratic_variation })
}

/// `Σ γ^{2k} (R_{k+1} − R̂(s_k, a_k))²` along the episode.
pub fn chaotic_quadratic_variation(
    episode: &Episode,
    est: &RewardMeanEstimator,
    gamma: f64,
) -> Result<f64> {
    let g2 = gamma * gamma;
    let mut disc = 1.0;
    let mut qv = 0.0;
    for t in &episode.transitions {
        let dev = t.reward - est.estimate(t.state, t.action)?;
        qv += disc * dev * dev;
        disc *= g2;
    }
    Ok(qv)
}
