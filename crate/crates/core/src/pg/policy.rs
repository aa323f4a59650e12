use rand::Rng;

use crate::mdp::draw_index;

/// Boltzmann policy over one-hot `(state, action)` features:
/// `π(a | s) ∝ exp(θ[s, a])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
    theta: Vec<f64>,
}

impl SoftmaxPolicy {
    /// Uniform policy (`θ = 0`).
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, theta: vec![0.0; n_states * n_actions] }
    }

    pub fn from_theta(n_states: usize, n_actions: usize, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), n_states * n_actions, "one coefficient per (state, action)");
        Self { n_states, n_actions, theta }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Index of `θ[s, a]` in the flat parameter vector.
    pub fn index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// `π(· | s)`, computed with the max logit subtracted.
    pub fn probs(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_actions];
        self.probs_into(s, &mut out);
        out
    }

    pub fn probs_into(&self, s: usize, out: &mut [f64]) {
        let logits = &self.theta[s * self.n_actions..(s + 1) * self.n_actions];
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (o, &l) in out.iter_mut().zip(logits) {
            *o = (l - m).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
        }
    }

    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        let logits = &self.theta[s * self.n_actions..(s + 1) * self.n_actions];
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        logits[a] - lse
    }

    /// Score `∇_θ ln π(a | s) = φ(s, a) − Σ_a' π(a' | s) φ(s, a')` as a dense vector.
    pub fn score(&self, s: usize, a: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.theta.len()];
        let p = self.probs(s);
        let base = s * self.n_actions;
        for (k, pk) in p.iter().enumerate() {
            g[base + k] = -pk;
        }
        g[base + a] += 1.0;
        g
    }

    /// Draws an action and returns it with its score vector.
    pub fn sample_and_score<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> (usize, Vec<f64>) {
        let a = self.tables().sample(s, rng);
        (a, self.score(s, a))
    }

    /// Precomputed probabilities and CDFs for repeated sampling.
    pub fn tables(&self) -> PolicyTables {
        let mut probs = vec![0.0; self.theta.len()];
        let mut cdf = vec![0.0; self.theta.len()];
        for s in 0..self.n_states {
            let row = s * self.n_actions..(s + 1) * self.n_actions;
            self.probs_into(s, &mut probs[row.clone()]);
            let mut acc = 0.0;
            for k in row {
                acc += probs[k];
                cdf[k] = acc;
            }
        }
        PolicyTables { n_actions: self.n_actions, probs, cdf }
    }
}

/// Snapshot of a policy's action distributions.
#[derive(Clone, Debug)]
pub struct PolicyTables {
    n_actions: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl PolicyTables {
    pub fn probs(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// One uniform draw per call.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        draw_index(&self.cdf[s * self.n_actions..(s + 1) * self.n_actions], rng.random::<f64>())
    }
}

/// Draws an action of `policy` in state `s` and returns it with its score.
pub fn policy_sample_and_grad<R: Rng + ?Sized>(
    policy: &SoftmaxPolicy,
    s: usize,
    rng: &mut R,
) -> (usize, Vec<f64>) {
    policy.sample_and_score(s, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let p = SoftmaxPolicy::new(3, 21);
        for s in 0..3 {
            assert!(p.probs(s).iter().all(|&x| (x - 1.0 / 21.0).abs() < 1e-15));
        }
    }

    #[test]
    fn expected_score_is_zero() {
        let p = SoftmaxPolicy::from_theta(2, 3, vec![0.3, -1.2, 2.0, 0.0, 0.5, -0.5]);
        for s in 0..2 {
            let probs = p.probs(s);
            let mut mean = vec![0.0; 6];
            for a in 0..3 {
                for (m, g) in mean.iter_mut().zip(p.score(s, a)) {
                    *m += probs[a] * g;
                }
            }
            assert!(mean.iter().all(|m| m.abs() < 1e-15));
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let theta = vec![0.3, -1.2, 2.0, 0.0, 0.5, -0.5];
        let p = SoftmaxPolicy::from_theta(2, 3, theta.clone());
        let h = 1e-6;
        for (s, a) in [(0, 1), (1, 2), (0, 2)] {
            let g = p.score(s, a);
            for k in 0..6 {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (SoftmaxPolicy::from_theta(2, 3, up).log_prob(s, a)
                    - SoftmaxPolicy::from_theta(2, 3, dn).log_prob(s, a))
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-5, "coordinate {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn sampling_follows_probabilities() {
        let p = SoftmaxPolicy::from_theta(1, 3, vec![0.0, 1.0, -1.0]);
        let probs = p.probs(0);
        let tables = p.tables();
        let mut rng = stream(8, &[]);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[tables.sample(0, &mut rng)] += 1;
        }
        for a in 0..3 {
            let f = counts[a] as f64 / n as f64;
            let se = (probs[a] * (1.0 - probs[a]) / n as f64).sqrt();
            assert!((f - probs[a]).abs() < 4.0 * se);
        }
    }

    proptest! {
        #[test]
        fn probabilities_normalised_and_positive(theta in prop::collection::vec(-30.0f64..30.0, 8)) {
            let p = SoftmaxPolicy::from_theta(2, 4, theta);
            for s in 0..2 {
                let probs = p.probs(s);
                prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(probs.iter().all(|&x| x > 0.0));
            }
        }
    }
}
