//! Gradient oracles by exhaustive trajectory enumeration.
//!
//! On a small finite-horizon MDP every state-action path can be listed with
//! its probability. Reward noise does not depend on the policy, so each
//! objective is a policy-weighted sum of per-path conditional statistics and
//! its exact gradient follows from `∇P(path) = P(path) Σ_t ∇ln π(a_t | s_t)`.
//! All oracles accumulate rewards with absolute discounts `γ^t`; they agree
//! with the reward-to-go estimators when `γ = 1`.

use serde::{Deserialize, Serialize};

use super::VectorMoments;
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::TabularMdp;
use crate::pg::{cmv_gradient, generate_batch, sharpe_direction, BatchContext, SoftmaxPolicy};
use crate::rng::stream;

/// Upper limit on the number of enumerated paths.
const MAX_PATHS: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// `E[J] − (β/2) E[Σ γ^{2t} (R − R̂)²]`.
    Cmv,
    /// `E[J] − (β/2) Var[J]`.
    Mv,
    /// `E[J] / √E[Σ γ^{2t} (R − R̂)²]`; ignores `β`.
    Sharpe,
    /// `E[J] − E[(Z − var)⁺]` with `Z = Σ γ^{2t} (R − R̂)`. The conditional
    /// tail expectation of each path is estimated once from
    /// `noise_samples` reward draws, so it does not depend on the policy.
    Cvar { var: f64, noise_samples: usize },
}

/// A state-action path with its policy-free statistics.
#[derive(Clone, Debug)]
struct Path {
    steps: Vec<(usize, usize)>,
    env_prob: f64,
    ret: f64,
    ret_sq: f64,
    qv: f64,
    tail: f64,
}

fn enumerate_paths(
    mdp: &TabularMdp,
    est: &RewardMeanEstimator,
    objective: &Objective,
) -> Result<Vec<Path>> {
    let horizon = mdp
        .horizon()
        .ok_or_else(|| Error::Unsupported("enumeration needs a finite horizon".into()))?;
    let model = mdp.reward_model();
    let g = mdp.gamma();
    // (s, a, s', transition probability) along the current prefix.
    let mut out = Vec::new();
    let mut raw: Vec<Vec<(usize, usize, usize)>> = Vec::new();
    let mut probs = Vec::new();
    let mut stack: Vec<(Vec<(usize, usize, usize)>, usize, f64)> = mdp
        .initial_distribution()
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, p)| (Vec::new(), s, *p))
        .collect();
    while let Some((prefix, s, prob)) = stack.pop() {
        if mdp.is_terminal(s) || prefix.len() == horizon {
            raw.push(prefix);
            probs.push(prob);
            if raw.len() > MAX_PATHS {
                return Err(Error::Unsupported("too many paths to enumerate".into()));
            }
            continue;
        }
        for a in (0..mdp.n_actions()).rev() {
            for (next, p) in mdp.transition_probs(s, a).iter().enumerate().rev() {
                if *p > 0.0 {
                    let mut longer = prefix.clone();
                    longer.push((s, a, next));
                    stack.push((longer, next, prob * p));
                }
            }
        }
    }
    for (i, (steps, env_prob)) in raw.into_iter().zip(probs).enumerate() {
        let (mut ret, mut noise, mut qv, mut disc) = (0.0, 0.0, 0.0, 1.0);
        for &(s, a, next) in &steps {
            let m = model.mean(s, a, next);
            let v = model.variance(s, a, next);
            let off = m - est.estimate(s, a)?;
            ret += disc * m;
            noise += disc * disc * v;
            qv += disc * disc * (v + off * off);
            disc *= g;
        }
        let tail = match *objective {
            Objective::Cvar { var, noise_samples } => {
                if noise_samples == 0 {
                    return Err(Error::Config("noise_samples must be positive".into()));
                }
                let mut rng = stream(u64::from_le_bytes(*b"cvartail"), &[i as u64]);
                let mut acc = 0.0;
                for _ in 0..noise_samples {
                    let (mut z, mut d2) = (0.0, 1.0);
                    for &(s, a, next) in &steps {
                        let r = model.sample(s, a, next, &mut rng);
                        z += d2 * (r - est.estimate(s, a)?);
                        d2 *= g * g;
                    }
                    acc += (z - var).max(0.0);
                }
                acc / noise_samples as f64
            }
            _ => 0.0,
        };
        out.push(Path {
            steps: steps.iter().map(|&(s, a, _)| (s, a)).collect(),
            env_prob,
            ret,
            ret_sq: ret * ret + noise,
            qv,
            tail,
        });
    }
    Ok(out)
}

/// Expectations of the path statistics and their gradients.
struct Moments {
    ret: f64,
    ret_sq: f64,
    qv: f64,
    tail: f64,
    d_ret: Vec<f64>,
    d_ret_sq: Vec<f64>,
    d_qv: Vec<f64>,
    d_tail: Vec<f64>,
}

fn moments(paths: &[Path], policy: &SoftmaxPolicy) -> Moments {
    let np = policy.theta().len();
    let na = policy.n_actions();
    let tables = policy.tables();
    let mut m = Moments {
        ret: 0.0,
        ret_sq: 0.0,
        qv: 0.0,
        tail: 0.0,
        d_ret: vec![0.0; np],
        d_ret_sq: vec![0.0; np],
        d_qv: vec![0.0; np],
        d_tail: vec![0.0; np],
    };
    let mut score = vec![0.0; np];
    for path in paths {
        let mut p = path.env_prob;
        score.iter_mut().for_each(|x| *x = 0.0);
        for &(s, a) in &path.steps {
            let probs = tables.probs(s);
            p *= probs[a];
            score[s * na + a] += 1.0;
            for (k, pk) in probs.iter().enumerate() {
                score[s * na + k] -= pk;
            }
        }
        m.ret += p * path.ret;
        m.ret_sq += p * path.ret_sq;
        m.qv += p * path.qv;
        m.tail += p * path.tail;
        for k in 0..np {
            let w = p * score[k];
            m.d_ret[k] += w * path.ret;
            m.d_ret_sq[k] += w * path.ret_sq;
            m.d_qv[k] += w * path.qv;
            m.d_tail[k] += w * path.tail;
        }
    }
    m
}

fn value_of(m: &Moments, objective: &Objective, beta: f64) -> f64 {
    match objective {
        Objective::Cmv => m.ret - 0.5 * beta * m.qv,
        Objective::Mv => m.ret - 0.5 * beta * (m.ret_sq - m.ret * m.ret),
        Objective::Sharpe => m.ret / m.qv.sqrt(),
        Objective::Cvar { .. } => m.ret - m.tail,
    }
}

fn gradient_of(m: &Moments, objective: &Objective, beta: f64) -> Vec<f64> {
    let n = m.d_ret.len();
    match objective {
        Objective::Cmv => (0..n).map(|k| m.d_ret[k] - 0.5 * beta * m.d_qv[k]).collect(),
        Objective::Mv => (0..n)
            .map(|k| m.d_ret[k] - 0.5 * beta * (m.d_ret_sq[k] - 2.0 * m.ret * m.d_ret[k]))
            .collect(),
        Objective::Sharpe => sharpe_direction(m.ret, m.qv, &m.d_ret, &m.d_qv),
        Objective::Cvar { .. } => (0..n).map(|k| m.d_ret[k] - m.d_tail[k]).collect(),
    }
}

/// Objective value at `policy` by enumeration.
pub fn exact_objective(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
    est: &RewardMeanEstimator,
    objective: &Objective,
    beta: f64,
) -> Result<f64> {
    let paths = enumerate_paths(mdp, est, objective)?;
    Ok(value_of(&moments(&paths, policy), objective, beta))
}

/// Exact likelihood-ratio gradient at `policy` by enumeration.
pub fn exact_gradient(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
    est: &RewardMeanEstimator,
    objective: &Objective,
    beta: f64,
) -> Result<Vec<f64>> {
    let paths = enumerate_paths(mdp, est, objective)?;
    Ok(gradient_of(&moments(&paths, policy), objective, beta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_abs_error: f64,
    /// `max_abs_error` over the sup norm of the numeric gradient.
    pub max_rel_error: f64,
}

/// Compares the enumerated gradient with central differences of the
/// enumerated objective at step `h`.
pub fn finite_diff_gradient_check(
    policy: &SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &RewardMeanEstimator,
    objective: &Objective,
    beta: f64,
    h: f64,
) -> Result<FdReport> {
    if !(h > 0.0) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let paths = enumerate_paths(mdp, est, objective)?;
    let analytic = gradient_of(&moments(&paths, policy), objective, beta);
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..analytic.len() {
        let mut up = policy.clone();
        let mut dn = policy.clone();
        up.theta_mut()[k] += h;
        dn.theta_mut()[k] -= h;
        let fu = value_of(&moments(&paths, &up), objective, beta);
        let fd = value_of(&moments(&paths, &dn), objective, beta);
        numeric.push((fu - fd) / (2.0 * h));
    }
    let max_abs_error =
        analytic.iter().zip(&numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
    let scale = numeric.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_rel_error = if max_abs_error == 0.0 { 0.0 } else { max_abs_error / scale };
    Ok(FdReport { analytic, numeric, max_abs_error, max_rel_error })
}

/// Coordinate-wise mean and standard error of per-episode estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientStats {
    pub n_episodes: usize,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl GradientStats {
    /// Largest `|mean_k − target_k| / se_k`; coordinates with zero error
    /// and zero spread count as 0.
    pub fn max_z(&self, target: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.std_error)
            .zip(target)
            .map(|((m, se), t)| {
                let d = (m - t).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d / se
                }
            })
            .fold(0.0, f64::max)
    }
}

fn single_episode_gradients<F>(
    policy: &SoftmaxPolicy,
    mdp: &TabularMdp,
    n_episodes: usize,
    seed: u64,
    mut per_episode: F,
) -> Result<()>
where
    F: FnMut(&[crate::mdp::Episode]) -> Result<()>,
{
    const CHUNK: usize = 10_000;
    if n_episodes < 2 {
        return Err(Error::Config("need at least two episodes".into()));
    }
    let tables = policy.tables();
    let mut done = 0;
    let mut chunk = 0u64;
    while done < n_episodes {
        let b = CHUNK.min(n_episodes - done);
        let ctx = BatchContext { seed, iteration: chunk, max_steps: mdp.horizon().unwrap_or(1000) };
        let episodes = generate_batch(mdp, &tables, b, &ctx)?;
        for ep in episodes.chunks(1) {
            per_episode(ep)?;
        }
        done += b;
        chunk += 1;
    }
    Ok(())
}

/// Per-episode CMV-REINFORCE gradient estimates at a fixed policy and
/// estimator, summarised by mean and standard error. Chunk `c` of 10⁴
/// episodes is drawn as batch iteration `c`.
pub fn mc_gradient_stats(
    policy: &SoftmaxPolicy,
    mdp: &TabularMdp,
    est: &RewardMeanEstimator,
    beta: f64,
    n_episodes: usize,
    seed: u64,
) -> Result<GradientStats> {
    let mut acc = VectorMoments::new(policy.theta().len());
    single_episode_gradients(policy, mdp, n_episodes, seed, |ep| {
        acc.push(&cmv_gradient(policy, ep, est, beta, mdp.gamma())?.grad);
        Ok(())
    })?;
    Ok(GradientStats { n_episodes: acc.count(), mean: acc.mean(), std_error: acc.std_error() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasReport {
    pub n_episodes: usize,
    /// Mean of exact-estimator minus perturbed-estimator gradient estimates.
    pub gap: Vec<f64>,
    /// Mean of the bias formula `(β/2) Σ_t γ^{2t} ∇ln π(a_t | s_t) b_t` with
    /// `b_t = e² Σ_{t' ≥ t} γ^{2(t'−t)}`.
    pub formula: Vec<f64>,
    /// Standard error of the per-episode difference between the two.
    pub std_error: Vec<f64>,
    /// Largest coordinate-wise `|gap − formula| / std_error`.
    pub max_z: f64,
}

/// Measures the gradient bias caused by shifting every reward-mean estimate
/// by `offset`, on the same episodes, against its closed-form expectation.
pub fn gradient_bias_check(
    policy: &SoftmaxPolicy,
    mdp: &TabularMdp,
    beta: f64,
    offset: f64,
    n_episodes: usize,
    seed: u64,
) -> Result<BiasReport> {
    if mdp.gamma() != 1.0 {
        return Err(Error::Unsupported("bias check assumes undiscounted episodes".into()));
    }
    let exact = RewardMeanEstimator::exact(mdp);
    let shifted: Vec<f64> = mdp.mean_reward_table().iter().map(|m| m + offset).collect();
    let perturbed = RewardMeanEstimator::frozen(mdp.n_states(), mdp.n_actions(), shifted);
    let np = policy.theta().len();
    let na = policy.n_actions();
    let tables = policy.tables();
    let mut gap_acc = VectorMoments::new(np);
    let mut formula_acc = VectorMoments::new(np);
    let mut diff_acc = VectorMoments::new(np);
    let e2 = offset * offset;
    single_episode_gradients(policy, mdp, n_episodes, seed, |ep| {
        let a = cmv_gradient(policy, ep, &exact, beta, 1.0)?.grad;
        let b = cmv_gradient(policy, ep, &perturbed, beta, 1.0)?.grad;
        let gap: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mut formula = vec![0.0; np];
        let len = ep[0].transitions.len();
        for (t, tr) in ep[0].transitions.iter().enumerate() {
            let w = 0.5 * beta * e2 * (len - t) as f64;
            formula[tr.state * na + tr.action] += w;
            for (k, p) in tables.probs(tr.state).iter().enumerate() {
                formula[tr.state * na + k] -= p * w;
            }
        }
        let diff: Vec<f64> = gap.iter().zip(&formula).map(|(x, y)| x - y).collect();
        gap_acc.push(&gap);
        formula_acc.push(&formula);
        diff_acc.push(&diff);
        Ok(())
    })?;
    let stats = GradientStats {
        n_episodes: diff_acc.count(),
        mean: diff_acc.mean(),
        std_error: diff_acc.std_error(),
    };
    let max_z = stats.max_z(&vec![0.0; np]);
    Ok(BiasReport {
        n_episodes: stats.n_episodes,
        gap: gap_acc.mean(),
        formula: formula_acc.mean(),
        std_error: stats.std_error,
        max_z,
    })
}
