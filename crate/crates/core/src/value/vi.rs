use super::argmax;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

#[derive(Clone, Debug, PartialEq)]
pub struct ValueIterationResult {
    /// Action values of the first decision (time 0 for fixed-horizon MDPs).
    pub q: Vec<Vec<f64>>,
    pub policy: Vec<usize>,
    pub iterations: usize,
}

/// Exact planning on the deterministic modified reward
/// `R̄(s, a) − (β/2) Var[R | s, a]`.
///
/// Fixed-horizon MDPs are solved by backward induction over the horizon;
/// otherwise sweeps run until the largest change drops below `tol`.
pub fn modified_reward_value_iteration(
    mdp: &TabularMdp,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ValueIterationResult> {
    if mdp.gamma() < 1.0 || mdp.is_average_reward() {
        return Err(Error::Unsupported(
            "modified-reward planning covers the undiscounted episodic case".into(),
        ));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let reward: Vec<f64> = (0..ns)
        .flat_map(|s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| mdp.mean_reward(s, a) - 0.5 * beta * mdp.reward_variance(s, a))
        .collect();
    let backup = |v: &[f64]| -> Vec<Vec<f64>> {
        (0..ns)
            .map(|s| {
                (0..na)
                    .map(|a| {
                        if mdp.is_terminal(s) {
                            return 0.0;
                        }
                        let cont: f64 =
                            mdp.transition_probs(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
                        reward[s * na + a] + cont
                    })
                    .collect()
            })
            .collect()
    };
    let state_values = |q: &[Vec<f64>]| -> Vec<f64> {
        q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
    };
    let mut v = vec![0.0; ns];
    let mut q;
    let mut iterations = 0;
    match mdp.horizon() {
        Some(h) => {
            q = backup(&v);
            iterations += 1;
            while iterations < h {
                v = state_values(&q);
                q = backup(&v);
                iterations += 1;
            }
        }
        None => loop {
            q = backup(&v);
            iterations += 1;
            let next = state_values(&q);
            let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if change < tol {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::Numeric(format!(
                    "value iteration did not converge in {max_iter} sweeps (last change {change})"
                )));
            }
        },
    }
    let policy = q.iter().map(|row| argmax(row)).collect();
    Ok(ValueIterationResult { q, policy, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{GridWorldConfig, RegimeSwitchConfig};

    #[test]
    fn noiseless_toy_takes_the_best_reward() {
        let mdp = RegimeSwitchConfig::toy(0.0, 10).build_mdp().unwrap();
        let r = modified_reward_value_iteration(&mdp, 10.0, 1e-12, 100).unwrap();
        assert_eq!(r.policy, vec![1, 0]);
        assert_eq!(r.iterations, 10);
    }

    #[test]
    fn strong_risk_aversion_avoids_noise() {
        // Penalty (β/2)σ² = 2.56 outweighs the +2 gap in the first state.
        let mdp = RegimeSwitchConfig::toy(0.16, 10).build_mdp().unwrap();
        let r = modified_reward_value_iteration(&mdp, 200.0, 1e-12, 100).unwrap();
        assert_eq!(r.policy, vec![0, 0]);
        let r = modified_reward_value_iteration(&mdp, 50.0, 1e-12, 100).unwrap();
        assert_eq!(r.policy, vec![1, 0]);
    }

    #[test]
    fn grid_values_converge() {
        let mdp = GridWorldConfig::default().build_mdp().unwrap();
        let r = modified_reward_value_iteration(&mdp, 0.0, 1e-10, 100_000).unwrap();
        assert!(r.q[12].iter().all(|v| v.is_finite() && *v < 0.0));
        assert_eq!(r.q[3], vec![0.0; 4]);
    }
}
