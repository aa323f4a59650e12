//! Moment identities of the chaotic martingale.

use rayon::prelude::*;

use super::{mean, standard_error, variance};
use crate::error::{Error, Result};
use crate::estimator::RewardMeanEstimator;
use crate::mdp::{sample_episode, Episode, TabularMdp};
use crate::rng::{stream, StreamRng};

/// `Σ γ^{2t} Var[R | s_t, a_t]`, the predictable quadratic variation of the
/// chaotic part under exact conditional moments.
pub fn predictable_quadratic_variation(ep: &Episode, mdp: &TabularMdp) -> f64 {
    let g2 = mdp.gamma() * mdp.gamma();
    let mut disc = 1.0;
    let mut total = 0.0;
    for tr in &ep.transitions {
        total += disc * mdp.reward_variance(tr.state, tr.action);
        disc *= g2;
    }
    total
}

fn rollouts<P>(
    mdp: &TabularMdp,
    policy: &P,
    n_episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<Episode>>
where
    P: Fn(usize, &mut StreamRng) -> usize + Sync,
{
    if n_episodes < 2 {
        return Err(Error::Config("need at least two episodes".into()));
    }
    (0..n_episodes as u64)
        .into_par_iter()
        .map(|i| sample_episode(mdp, |s, r| policy(s, r), max_steps, &mut stream(seed, &[i])))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    pub n_episodes: usize,
    /// Mean of `(Σ γ^t (R − R̂))²`.
    pub mean_squared_chaotic: f64,
    /// Mean of `Σ γ^{2t} (R − R̂)²`.
    pub mean_quadratic_variation: f64,
    /// Standard error of the difference treating the two means as independent.
    pub pooled_se: f64,
    /// Standard error of the per-episode difference.
    pub paired_se: f64,
    /// `|difference| / pooled_se`; zero when both sides are identical.
    pub z: f64,
}

impl MartingaleReport {
    pub fn passed(&self) -> bool {
        self.z <= 3.0
    }
}

/// Compares the second moment of the chaotic sum with its mean realised
/// quadratic variation over `n_episodes` rollouts; episode `i` uses stream
/// `(seed, i)`. Meaningful when `est` holds exact conditional means.
pub fn martingale_check<P>(
    mdp: &TabularMdp,
    policy: P,
    est: &RewardMeanEstimator,
    n_episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<MartingaleReport>
where
    P: Fn(usize, &mut StreamRng) -> usize + Sync,
{
    let episodes = rollouts(mdp, &policy, n_episodes, max_steps, seed)?;
    let g = mdp.gamma();
    let mut sq = Vec::with_capacity(n_episodes);
    let mut qv = Vec::with_capacity(n_episodes);
    for ep in &episodes {
        let (mut sum, mut q, mut disc) = (0.0, 0.0, 1.0);
        for tr in &ep.transitions {
            let dev = tr.reward - est.estimate(tr.state, tr.action)?;
            sum += disc * dev;
            q += disc * disc * dev * dev;
            disc *= g;
        }
        sq.push(sum * sum);
        qv.push(q);
    }
    let diff: Vec<f64> = sq.iter().zip(&qv).map(|(a, b)| a - b).collect();
    let pooled_se = (variance(&sq) / n_episodes as f64 + variance(&qv) / n_episodes as f64).sqrt();
    let gap = mean(&sq) - mean(&qv);
    Ok(MartingaleReport {
        n_episodes,
        mean_squared_chaotic: mean(&sq),
        mean_quadratic_variation: mean(&qv),
        pooled_se,
        paired_se: standard_error(&diff),
        z: if gap == 0.0 { 0.0 } else { gap.abs() / pooled_se },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropicReport {
    pub beta: f64,
    pub n_episodes: usize,
    /// `β⁻¹ ln E[exp(−β · chaotic sum)]`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `β⁻¹ ln √E[exp(2β² · predictable quadratic variation)]`.
    pub rhs: f64,
    pub rhs_se: f64,
}

impl EntropicReport {
    /// Delta-method standard error of `lhs − rhs`.
    pub fn combined_se(&self) -> f64 {
        (self.lhs_se * self.lhs_se + self.rhs_se * self.rhs_se).sqrt()
    }

    pub fn holds_within(&self, n_se: f64) -> bool {
        self.lhs <= self.rhs + n_se * self.combined_se()
    }
}

/// Monte-Carlo estimates of both sides of the entropic bound on the chaotic
/// sum, using exact conditional means and variances of `mdp`.
pub fn entropic_bound_check<P>(
    mdp: &TabularMdp,
    policy: P,
    beta: f64,
    n_episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<EntropicReport>
where
    P: Fn(usize, &mut StreamRng) -> usize + Sync,
{
    if !(beta > 0.0) {
        return Err(Error::Config("entropic bound needs β > 0".into()));
    }
    let episodes = rollouts(mdp, &policy, n_episodes, max_steps, seed)?;
    let g = mdp.gamma();
    let mut left = Vec::with_capacity(n_episodes);
    let mut right = Vec::with_capacity(n_episodes);
    for ep in &episodes {
        let (mut sum, mut disc) = (0.0, 1.0);
        for tr in &ep.transitions {
            sum += disc * (tr.reward - mdp.mean_reward(tr.state, tr.action));
            disc *= g;
        }
        left.push((-beta * sum).exp());
        right.push((2.0 * beta * beta * predictable_quadratic_variation(ep, mdp)).exp());
    }
    let (ml, mr) = (mean(&left), mean(&right));
    Ok(EntropicReport {
        beta,
        n_episodes,
        lhs: ml.ln() / beta,
        lhs_se: standard_error(&left) / (ml * beta),
        rhs: mr.ln() / (2.0 * beta),
        rhs_se: standard_error(&right) / (mr * 2.0 * beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RegimeSwitchConfig;

    #[test]
    fn deterministic_rewards_give_zero_on_both_sides() {
        let mdp = RegimeSwitchConfig::toy(0.0, 20).build_mdp().unwrap();
        let est = RewardMeanEstimator::exact(&mdp);
        let rep = martingale_check(&mdp, |_, _| 1, &est, 100, 100, 0).unwrap();
        assert_eq!(rep.mean_squared_chaotic, 0.0);
        assert_eq!(rep.mean_quadratic_variation, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn toy_second_moment_matches_quadratic_variation() {
        let mdp = RegimeSwitchConfig::toy(0.16, 50).build_mdp().unwrap();
        let est = RewardMeanEstimator::exact(&mdp);
        let rep = martingale_check(&mdp, |_, _| 1, &est, 20_000, 100, 3).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.mean_quadratic_variation - 50.0 * 0.0256).abs() < 0.05);
    }

    #[test]
    fn entropic_bound_on_always_risky_toy() {
        // Both sides are known: β T σ² / 2 on the left and β T σ² on the right.
        let (t, s, beta) = (40usize, 0.3, 0.5);
        let mdp = RegimeSwitchConfig::toy(s, t).build_mdp().unwrap();
        let rep = entropic_bound_check(&mdp, |_, _| 1, beta, 20_000, 100, 8).unwrap();
        let v = t as f64 * s * s;
        assert!((rep.rhs - beta * v).abs() < 1e-9);
        assert!((rep.lhs - 0.5 * beta * v).abs() < 4.0 * rep.lhs_se.max(1e-9));
        assert!(rep.holds_within(3.0));
    }
}
