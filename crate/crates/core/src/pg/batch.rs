use rayon::prelude::*;

use super::PolicyTables;
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{sample_episode, Episode, TabularMdp};
use crate::rng::stream;

/// Coordinates of one Monte-Carlo iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchContext {
    pub seed: u64,
    /// Zero-based iteration index; step sizes are evaluated at `iteration + 1`.
    pub iteration: u64,
    /// Truncation length for MDPs without a horizon.
    pub max_steps: usize,
}

impl BatchContext {
    pub fn step_index(&self) -> u64 {
        self.iteration + 1
    }
}

/// Generates `batch_size` episodes in parallel, episode `b` drawing from the
/// stream `(seed, iteration, b)`.
pub fn generate_batch(
    mdp: &TabularMdp,
    tables: &PolicyTables,
    batch_size: usize,
    ctx: &BatchContext,
) -> Result<Vec<Episode>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    (0..batch_size as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(ctx.seed, &[ctx.iteration, b]);
            sample_episode(mdp, |s, r| tables.sample(s, r), ctx.max_steps, &mut rng)
        })
        .collect()
}

/// Feeds a batch to the reward-mean estimator: running means in tabular
/// mode, replay insertion followed by one distributional update otherwise.
pub(crate) fn observe_batch(
    est: &mut RewardMeanEstimator,
    episodes: &[Episode],
    ctx: &BatchContext,
) -> Result<()> {
    for tr in episodes.iter().flat_map(|e| &e.transitions) {
        est.observe(tr.state, tr.action, tr.reward);
    }
    if est.replay_len() == 0 {
        return Ok(());
    }
    est.refresh(&mut stream(ctx.seed, &[ctx.iteration, u64::MAX]))
}

/// Generates a batch under `policy` and feeds it to `est`.
pub(crate) fn collect(
    policy: &super::SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &mut RewardMeanEstimator,
    batch_size: usize,
    ctx: &BatchContext,
) -> Result<Vec<Episode>> {
    let episodes = generate_batch(mdp, &policy.tables(), batch_size, ctx)?;
    observe_batch(est, &episodes, ctx)?;
    Ok(episodes)
}
