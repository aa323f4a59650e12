use serde::{Deserialize, Serialize};

use super::batch::collect;
use super::{ascend, BatchContext, GradientEstimate, PolicyTables, SoftmaxPolicy, TimescaleSchedule};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{Episode, TabularMdp};

/// Form of the fast-timescale tracking recursions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SharpeMode {
    /// `x += α (batch mean − x)`.
    #[default]
    Recentered,
    /// `x += α · batch mean`, without the pull towards the current value.
    /// Kept for audit; it does not converge.
    Literal,
}

/// Running estimates of the expected return and expected chaotic quadratic
/// variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpeState {
    pub v: f64,
    pub vv: f64,
    /// Policy updates are skipped while `vv` is at or below this value.
    pub floor: f64,
    pub mode: SharpeMode,
}

impl SharpeState {
    pub fn new(floor: f64, mode: SharpeMode) -> Self {
        Self { v: 0.0, vv: 0.0, floor, mode }
    }

    pub fn ratio(&self) -> f64 {
        self.v / self.vv.sqrt()
    }

    fn track(&mut self, mean_return: f64, mean_qv: f64, alpha: f64) {
        match self.mode {
            SharpeMode::Recentered => {
                self.v += alpha * (mean_return - self.v);
                self.vv += alpha * (mean_qv - self.vv);
            }
            SharpeMode::Literal => {
                self.v += alpha * mean_return;
                self.vv += alpha * mean_qv;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharpeStatus {
    Updated,
    /// The variation estimate sat at or below the floor; `θ` was left alone.
    Skipped,
}

/// Quotient-rule direction `g₁/√vv − ½ v g₂ / vv^{3/2}`.
pub fn sharpe_direction(v: f64, vv: f64, g1: &[f64], g2: &[f64]) -> Vec<f64> {
    let root = vv.sqrt();
    let c2 = 0.5 * v / (vv * root);
    g1.iter().zip(g2).map(|(a, b)| a / root - c2 * b).collect()
}

/// Score-weighted sums with absolute discounts: `γ^t R` for the return and
/// `γ^{2t} (R − R̂)²` for the quadratic variation.
pub(crate) fn absolute_gradients(
    policy: &SoftmaxPolicy,
    tables: &PolicyTables,
    episodes: &[Episode],
    est: &RewardMeanEstimator,
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let na = policy.n_actions();
    let np = policy.theta().len();
    let (mut g1, mut g2) = (vec![0.0; np], vec![0.0; np]);
    let (mut w1, mut w2) = (vec![0.0; policy.n_states()], vec![0.0; policy.n_states()]);
    let mut returns = Vec::with_capacity(episodes.len());
    let mut qvs = Vec::with_capacity(episodes.len());
    let mut terms = Vec::new();
    for ep in episodes {
        terms.clear();
        let mut disc = 1.0;
        for tr in &ep.transitions {
            let dev = tr.reward - est.estimate(tr.state, tr.action)?;
            terms.push((disc * tr.reward, disc * disc * dev * dev));
            disc *= gamma;
        }
        let (mut a, mut q) = (0.0, 0.0);
        for (tr, (r, d)) in ep.transitions.iter().zip(&terms).rev() {
            a += r;
            q += d;
            g1[tr.state * na + tr.action] += a;
            w1[tr.state] += a;
            g2[tr.state * na + tr.action] += q;
            w2[tr.state] += q;
        }
        returns.push(a);
        qvs.push(q);
    }
    let b = episodes.len() as f64;
    for (g, w) in [(&mut g1, &w1), (&mut g2, &w2)] {
        for (s, ws) in w.iter().enumerate() {
            for (k, p) in tables.probs(s).iter().enumerate() {
                g[s * na + k] -= p * ws;
            }
        }
        for x in g.iter_mut() {
            *x /= b;
        }
    }
    Ok((g1, g2, returns, qvs))
}

/// One iteration of the chaotic Sharpe-ratio gradient method.
///
/// The running estimates move first on the `alpha2` timescale. `θ` then
/// moves by `alpha1` along [`sharpe_direction`] evaluated at the updated
/// estimates, unless the variation estimate is at or below the floor.
pub fn sharpe_pg_iteration(
    policy: &mut SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &mut RewardMeanEstimator,
    batch_size: usize,
    schedule: &TimescaleSchedule,
    state: &mut SharpeState,
    ctx: &BatchContext,
) -> Result<(SharpeStatus, GradientEstimate)> {
    if !mdp.is_episodic() {
        return Err(Error::Unsupported("Sharpe gradient needs an episodic MDP".into()));
    }
    let (alpha1, alpha2, _) = schedule.at(ctx.step_index());
    let episodes = collect(policy, mdp, est, batch_size, ctx)?;
    let tables = policy.tables();
    let (g1, g2, returns, qvs) = absolute_gradients(policy, &tables, &episodes, est, mdp.gamma())?;
    state.track(crate::diagnostics::mean(&returns), crate::diagnostics::mean(&qvs), alpha2);
    let mut estimate =
        GradientEstimate { grad: vec![0.0; g1.len()], batch_size, returns, quadratic_variations: qvs };
    if !(state.vv > state.floor) {
        log::warn!(
            "iteration {}: variation estimate {} not above floor {}, policy update skipped",
            ctx.iteration,
            state.vv,
            state.floor
        );
        return Ok((SharpeStatus::Skipped, estimate));
    }
    estimate.grad = sharpe_direction(state.v, state.vv, &g1, &g2);
    ascend(policy, alpha1, &estimate.grad);
    Ok((SharpeStatus::Updated, estimate))
}
