use serde::{Deserialize, Serialize};

use super::batch::collect;
use super::reinforce::cmv_gradient;
use super::{ascend, BatchContext, GradientEstimate, SoftmaxPolicy, TimescaleSchedule};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::TabularMdp;

/// Running value-at-risk estimate of the discounted chaotic aggregate
/// `Z = Σ γ^{2t} (R_{t+1} − R̂)` at tail level `level`.
///
/// The indicator tests `Z ≥ var`, so the upper tail of chaotic surprises is
/// penalised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvarState {
    pub var: f64,
    pub level: f64,
}

impl CvarState {
    pub fn new(var: f64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!("tail level {level} outside (0, 1)")));
        }
        Ok(Self { var, level })
    }

    /// `var −= α (1 − (1 − level)^{-1} · fraction of Z at or above var)`.
    pub fn update(&mut self, z: &[f64], alpha: f64) {
        let hits = z.iter().filter(|&&x| x >= self.var).count() as f64 / z.len() as f64;
        self.var -= alpha * (1.0 - hits / (1.0 - self.level));
    }
}

/// One iteration of the chaotic CVaR gradient method.
///
/// The policy direction is the plain REINFORCE gradient minus
/// `(1/B) Σ_b S_b (Z_b − var) 1{Z_b ≥ var}` at the current `var`; afterwards
/// `var` moves on the `alpha2` timescale. The returned estimate stores `Z_b`
/// in `quadratic_variations`.
pub fn cvar_pg_iteration(
    policy: &mut SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &mut RewardMeanEstimator,
    batch_size: usize,
    schedule: &TimescaleSchedule,
    state: &mut CvarState,
    ctx: &BatchContext,
) -> Result<GradientEstimate> {
    if !mdp.is_episodic() {
        return Err(Error::Unsupported("CVaR gradient needs an episodic MDP".into()));
    }
    CvarState::new(state.var, state.level)?;
    let (alpha1, alpha2, _) = schedule.at(ctx.step_index());
    let episodes = collect(policy, mdp, est, batch_size, ctx)?;
    let mut g = cmv_gradient(policy, &episodes, est, 0.0, mdp.gamma())?;
    let tables = policy.tables();
    let na = policy.n_actions();
    let g2 = mdp.gamma() * mdp.gamma();
    let mut tail = vec![0.0; g.grad.len()];
    let mut weight = vec![0.0; policy.n_states()];
    let mut z_all = Vec::with_capacity(episodes.len());
    for ep in &episodes {
        let (mut z, mut disc) = (0.0, 1.0);
        for tr in &ep.transitions {
            z += disc * (tr.reward - est.estimate(tr.state, tr.action)?);
            disc *= g2;
        }
        z_all.push(z);
        if z >= state.var {
            let c = z - state.var;
            for tr in &ep.transitions {
                tail[tr.state * na + tr.action] += c;
                weight[tr.state] += c;
            }
        }
    }
    for (s, w) in weight.iter().enumerate() {
        if *w != 0.0 {
            for (k, p) in tables.probs(s).iter().enumerate() {
                tail[s * na + k] -= p * w;
            }
        }
    }
    let b = episodes.len() as f64;
    for (gk, tk) in g.grad.iter_mut().zip(&tail) {
        *gk -= tk / b;
    }
    ascend(policy, alpha1, &g.grad);
    state.update(&z_all, alpha2);
    g.quadratic_variations = z_all;
    Ok(g)
}
