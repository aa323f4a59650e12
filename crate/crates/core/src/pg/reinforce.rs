use super::batch::collect;
use super::{ascend, BatchContext, GradientEstimate, PolicyTables, SoftmaxPolicy};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{Episode, TabularMdp};

fn check_batch(episodes: &[Episode]) -> Result<()> {
    if episodes.is_empty() {
        Err(Error::Config("gradient estimate needs at least one episode".into()))
    } else {
        Ok(())
    }
}

/// Subtracts the baseline term `π(· | s) W[s]` from one-hot score sums and
/// divides by the batch size.
fn finish_one_hot(grad: &mut [f64], weight: &[f64], tables: &PolicyTables, n_actions: usize, b: usize) {
    for (s, w) in weight.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (k, p) in tables.probs(s).iter().enumerate() {
            grad[s * n_actions + k] -= p * w;
        }
    }
    let inv = b as f64;
    for g in grad.iter_mut() {
        *g /= inv;
    }
}

/// Batch estimate of the gradient of `E[J] − (β/2) E[⟨chaotic⟩]`.
///
/// Each step is weighted by its reward-to-go minus `β/2` times its
/// chaotic quadratic variation to go, with `γ` on rewards and `γ²` on
/// squared deviations. With `beta == 0` this is plain REINFORCE.
pub fn cmv_gradient(
    policy: &SoftmaxPolicy,
    episodes: &[Episode],
    est: &RewardMeanEstimator,
    beta: f64,
    gamma: f64,
) -> Result<GradientEstimate> {
    check_batch(episodes)?;
    let na = policy.n_actions();
    let tables = policy.tables();
    let mut grad = vec![0.0; policy.theta().len()];
    let mut weight = vec![0.0; policy.n_states()];
    let mut returns = Vec::with_capacity(episodes.len());
    let mut qvs = Vec::with_capacity(episodes.len());
    let g2 = gamma * gamma;
    for ep in episodes {
        let (mut g, mut qv) = (0.0, 0.0);
        for tr in ep.transitions.iter().rev() {
            let dev = tr.reward - est.estimate(tr.state, tr.action)?;
            g = tr.reward + gamma * g;
            qv = dev * dev + g2 * qv;
            let v = g - 0.5 * beta * qv;
            grad[tr.state * na + tr.action] += v;
            weight[tr.state] += v;
        }
        returns.push(g);
        qvs.push(qv);
    }
    finish_one_hot(&mut grad, &weight, &tables, na, episodes.len());
    Ok(GradientEstimate { grad, batch_size: episodes.len(), returns, quadratic_variations: qvs })
}

/// One CMV-REINFORCE iteration: sample a batch, update the reward-mean
/// estimator with it, then step `θ` along [`cmv_gradient`].
pub fn cmv_reinforce_iteration(
    policy: &mut SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &mut RewardMeanEstimator,
    batch_size: usize,
    beta: f64,
    alpha: f64,
    ctx: &BatchContext,
) -> Result<GradientEstimate> {
    if !mdp.is_episodic() {
        return Err(Error::Unsupported("REINFORCE needs an episodic MDP".into()));
    }
    let episodes = collect(policy, mdp, est, batch_size, ctx)?;
    let g = cmv_gradient(policy, &episodes, est, beta, mdp.gamma())?;
    ascend(policy, alpha, &g.grad);
    Ok(g)
}

/// Dense sum of the scores along an episode.
fn episode_score(ep: &Episode, tables: &PolicyTables, n_params: usize, na: usize) -> Vec<f64> {
    let mut s = vec![0.0; n_params];
    for tr in &ep.transitions {
        s[tr.state * na + tr.action] += 1.0;
        for (k, p) in tables.probs(tr.state).iter().enumerate() {
            s[tr.state * na + k] -= p;
        }
    }
    s
}

/// Per-coordinate variance-minimising baseline
/// `ℓ_k = Σ_b c_b S_bk² / Σ_b S_bk²`, zero where the denominator vanishes.
pub fn optimal_baseline(c: &[f64], scores: &[Vec<f64>]) -> Vec<f64> {
    let n = scores.first().map_or(0, Vec::len);
    (0..n)
        .map(|k| {
            let (mut num, mut den) = (0.0, 0.0);
            for (cb, sb) in c.iter().zip(scores) {
                let s2 = sb[k] * sb[k];
                num += cb * s2;
                den += s2;
            }
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .collect()
}

/// Likelihood-ratio gradient of `E[J] − (β/2) Var[J]` with the optimal
/// per-coordinate baseline on the variance part.
///
/// The variance gradient is `(1/B) Σ_b (J_b² − 2 μ J_b − ℓ_k) S_bk` where `S_b`
/// is the episode's summed score and `μ` the batch mean return.
pub fn mv_gradient(
    policy: &SoftmaxPolicy,
    episodes: &[Episode],
    beta: f64,
    gamma: f64,
) -> Result<GradientEstimate> {
    check_batch(episodes)?;
    let na = policy.n_actions();
    let tables = policy.tables();
    let n_params = policy.theta().len();
    let mut grad = vec![0.0; n_params];
    let mut weight = vec![0.0; policy.n_states()];
    let mut returns = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let mut g = 0.0;
        for tr in ep.transitions.iter().rev() {
            g = tr.reward + gamma * g;
            grad[tr.state * na + tr.action] += g;
            weight[tr.state] += g;
        }
        returns.push(g);
    }
    finish_one_hot(&mut grad, &weight, &tables, na, episodes.len());
    if beta != 0.0 {
        let mu = crate::diagnostics::mean(&returns);
        let c: Vec<f64> = returns.iter().map(|j| j * j - 2.0 * mu * j).collect();
        let scores: Vec<Vec<f64>> =
            episodes.iter().map(|ep| episode_score(ep, &tables, n_params, na)).collect();
        let baseline = optimal_baseline(&c, &scores);
        let b = episodes.len() as f64;
        for (k, gk) in grad.iter_mut().enumerate() {
            let var_k: f64 =
                c.iter().zip(&scores).map(|(cb, sb)| (cb - baseline[k]) * sb[k]).sum::<f64>() / b;
            *gk -= 0.5 * beta * var_k;
        }
    }
    Ok(GradientEstimate {
        grad,
        batch_size: episodes.len(),
        returns,
        quadratic_variations: Vec::new(),
    })
}

/// One mean-variance REINFORCE iteration. Needs no reward-mean estimator.
pub fn mv_reinforce_iteration(
    policy: &mut SoftmaxPolicy,
    mdp: &TabularMdp,
    batch_size: usize,
    beta: f64,
    alpha: f64,
    ctx: &BatchContext,
) -> Result<GradientEstimate> {
    if !mdp.is_episodic() {
        return Err(Error::Unsupported("REINFORCE needs an episodic MDP".into()));
    }
    let episodes = super::generate_batch(mdp, &policy.tables(), batch_size, ctx)?;
    let g = mv_gradient(policy, &episodes, beta, mdp.gamma())?;
    ascend(policy, alpha, &g.grad);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;

    fn ep(steps: &[(usize, usize, f64, usize)]) -> Episode {
        Episode {
            start_state: steps[0].0,
            transitions: steps
                .iter()
                .map(|&(s, a, r, n)| Transition { state: s, action: a, reward: r, next_state: n })
                .collect(),
            terminated: true,
        }
    }

    #[test]
    fn constant_returns_cancel_the_variance_term() {
        let c = 3.0;
        let returns = [c, c, c];
        let mu = c;
        let cb: Vec<f64> = returns.iter().map(|j| j * j - 2.0 * mu * j).collect();
        let scores = vec![vec![0.5, -0.5], vec![-0.2, 0.2], vec![1.0, 0.0]];
        let l = optimal_baseline(&cb, &scores);
        assert_eq!(l, vec![-c * c, -c * c]);
        assert!(cb.iter().all(|x| x - l[0] == 0.0));
    }

    #[test]
    fn zero_score_coordinate_gets_zero_baseline() {
        let l = optimal_baseline(&[1.0, 2.0], &[vec![0.0, 1.0], vec![0.0, 2.0]]);
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 9.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_vanishes_with_exact_deterministic_means() {
        let policy = SoftmaxPolicy::from_theta(2, 2, vec![0.1, -0.3, 0.7, 0.0]);
        let est = RewardMeanEstimator::frozen(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let batch = vec![ep(&[(0, 1, 2.0, 1), (1, 0, 3.0, 0)]), ep(&[(1, 1, 4.0, 1)])];
        let plain = cmv_gradient(&policy, &batch, &est, 0.0, 1.0).unwrap();
        let risky = cmv_gradient(&policy, &batch, &est, 5.0, 1.0).unwrap();
        assert_eq!(plain.grad, risky.grad);
        assert!(risky.quadratic_variations.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn hand_computed_single_step_gradient() {
        // Uniform policy over two actions, one episode taking action 1 with reward 2.
        let policy = SoftmaxPolicy::new(1, 2);
        let est = RewardMeanEstimator::frozen(1, 2, vec![0.0, 1.0]);
        let batch = vec![ep(&[(0, 1, 2.0, 0)])];
        let g = cmv_gradient(&policy, &batch, &est, 2.0, 1.0).unwrap();
        // v = 2 − (2/2)·1 = 1; score = (−½, ½).
        assert_eq!(g.grad, vec![-0.5, 0.5]);
        assert_eq!(g.returns, vec![2.0]);
        assert_eq!(g.quadratic_variations, vec![1.0]);
    }

    #[test]
    fn mv_with_zero_beta_is_reinforce() {
        let policy = SoftmaxPolicy::from_theta(2, 2, vec![0.1, -0.3, 0.7, 0.0]);
        let est = RewardMeanEstimator::frozen(2, 2, vec![0.0; 4]);
        let batch = vec![ep(&[(0, 1, 2.0, 1), (1, 0, 3.0, 0)]), ep(&[(1, 1, 4.0, 1)])];
        let mv = mv_gradient(&policy, &batch, 0.0, 1.0).unwrap();
        let cmv = cmv_gradient(&policy, &batch, &est, 0.0, 1.0).unwrap();
        assert_eq!(mv.grad, cmv.grad);
    }

    #[test]
    fn empty_batch_rejected() {
        let policy = SoftmaxPolicy::new(1, 2);
        let est = RewardMeanEstimator::frozen(1, 2, vec![0.0; 2]);
        assert!(cmv_gradient(&policy, &[], &est, 1.0, 1.0).is_err());
        assert!(mv_gradient(&policy, &[], 1.0, 1.0).is_err());
    }
}
