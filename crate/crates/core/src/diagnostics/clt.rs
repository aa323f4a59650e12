//! Asymptotic variance of long-run average rewards on finite Markov chains.
//!
//! For a chain with kernel `P`, rewards `R(x, y)` plus independent noise of
//! variance `v(x, y)`, and per-state mean `μ(x) = Σ_y P(x, y) (R(x, y))`, the
//! scaled error `√n (mean reward − m)` is asymptotically normal. Its variance
//! splits into a chaotic part (reward surprise given the current state), a
//! deterministic part (state switching, through the Poisson solution `f`)
//! and a cross term between the two, which vanishes whenever the reward is
//! a function of the current state or `f` is constant.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::variance;
use crate::error::{Error, Result};
use crate::mdp::{check_distribution, draw_index, TabularMdp};
use crate::rng::stream;

/// Largest accepted sup-norm residual of the Poisson equation.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub p: Vec<Vec<f64>>,
    /// Mean reward on each transition `x → y`.
    pub r: Vec<Vec<f64>>,
    /// Variance of zero-mean Gaussian noise added on each transition.
    pub noise_var: Option<Vec<Vec<f64>>>,
}

impl ChainSpec {
    pub fn new(p: Vec<Vec<f64>>, r: Vec<Vec<f64>>) -> Self {
        Self { p, r, noise_var: None }
    }

    /// Chain induced by a deterministic policy, keeping the per-transition
    /// reward mean and variance of the MDP.
    pub fn from_policy(mdp: &TabularMdp, actions: &[usize]) -> Result<Self> {
        let n = mdp.n_states();
        if actions.len() != n {
            return Err(Error::Config("one action per state required".into()));
        }
        let model = mdp.reward_model();
        let p: Vec<Vec<f64>> = (0..n).map(|x| mdp.transition_probs(x, actions[x]).to_vec()).collect();
        let r = (0..n).map(|x| (0..n).map(|y| model.mean(x, actions[x], y)).collect()).collect();
        let v = (0..n).map(|x| (0..n).map(|y| model.variance(x, actions[x], y)).collect()).collect();
        Ok(Self { p, r, noise_var: Some(v) })
    }

    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    fn noise(&self, x: usize, y: usize) -> f64 {
        self.noise_var.as_ref().map_or(0.0, |v| v[x][y])
    }

    /// Checks shapes, stochastic rows, irreducibility and aperiodicity.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(Error::Validation("chain has no states".into()));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|row| row.len() == n);
        if !square(&self.p) || !square(&self.r) || !self.noise_var.as_ref().is_none_or(square) {
            return Err(Error::Validation("chain matrices must be n × n".into()));
        }
        for (x, row) in self.p.iter().enumerate() {
            check_distribution(row).map_err(|e| Error::Validation(format!("row {x}: {e}")))?;
        }
        if self.noise_var.iter().flatten().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::Validation("noise variances must be nonnegative".into()));
        }
        let forward = reachable(n, |x, y| self.p[x][y] > 0.0);
        let backward = reachable(n, |x, y| self.p[y][x] > 0.0);
        if forward.iter().chain(&backward).any(|r| !r) {
            return Err(Error::Validation("chain is reducible".into()));
        }
        if period(&self.p) != 1 {
            return Err(Error::Validation("chain is periodic".into()));
        }
        Ok(())
    }
}

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        for y in 0..n {
            if edge(x, y) && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Period of an irreducible chain: gcd of `level(x) + 1 − level(y)` over edges,
/// with levels from a breadth-first search.
fn period(p: &[Vec<f64>]) -> usize {
    let n = p.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if p[x][y] > 0.0 && level[y] == usize::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let mut g = 0;
    for x in 0..n {
        for y in 0..n {
            if p[x][y] > 0.0 {
                g = gcd(g, (level[x] + 1).abs_diff(level[y]));
            }
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltDecomposition {
    pub stationary: Vec<f64>,
    pub long_run_mean: f64,
    /// Per-state expected reward `μ(x)`.
    pub state_means: Vec<f64>,
    pub sigma2_chaotic: f64,
    pub sigma2_deter: f64,
    /// `2 Σ_x d(x) Cov(R, f(Y) | x)`.
    pub sigma2_cross: f64,
    pub f_poisson: Vec<f64>,
    /// Sup-norm residual of the Poisson equation at the returned solution.
    pub residual: f64,
}

impl CltDecomposition {
    pub fn total_variance(&self) -> f64 {
        self.sigma2_chaotic + self.sigma2_deter + self.sigma2_cross
    }
}

/// [`solve_poisson_pinned`] with `f(0) = 0`.
pub fn solve_poisson(chain: &ChainSpec) -> Result<CltDecomposition> {
    solve_poisson_pinned(chain, 0)
}

/// Stationary distribution, Poisson solution with `f(pin) = 0`, and the
/// variance decomposition.
pub fn solve_poisson_pinned(chain: &ChainSpec, pin: usize) -> Result<CltDecomposition> {
    chain.validate()?;
    let n = chain.n_states();
    if pin >= n {
        return Err(Error::Config(format!("pin state {pin} outside the chain")));
    }
    let p = DMatrix::from_fn(n, n, |i, j| chain.p[i][j]);
    let mut a = DMatrix::identity(n, n) - p.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let d = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("stationary system is singular".into()))?;

    let mu: Vec<f64> = (0..n).map(|x| (0..n).map(|y| chain.p[x][y] * chain.r[x][y]).sum()).collect();
    let m: f64 = (0..n).map(|x| d[x] * mu[x]).sum();

    let mut a = DMatrix::identity(n, n) - &p;
    let mut rhs = DVector::from_fn(n, |x, _| mu[x] - m);
    a.row_mut(pin).fill(0.0);
    a[(pin, pin)] = 1.0;
    rhs[pin] = 0.0;
    let f = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("Poisson system is singular".into()))?;

    let pf: Vec<f64> = (0..n).map(|x| (0..n).map(|y| chain.p[x][y] * f[y]).sum()).collect();
    let residual = (0..n).map(|x| (pf[x] - f[x] - (m - mu[x])).abs()).fold(0.0, f64::max);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Numeric(format!("Poisson residual {residual:e} above tolerance")));
    }

    let (mut chaotic, mut deter, mut cross) = (0.0, 0.0, 0.0);
    for x in 0..n {
        let (mut r2, mut f2, mut rf) = (0.0, 0.0, 0.0);
        for y in 0..n {
            let pxy = chain.p[x][y];
            r2 += pxy * (chain.r[x][y] * chain.r[x][y] + chain.noise(x, y));
            f2 += pxy * f[y] * f[y];
            rf += pxy * chain.r[x][y] * f[y];
        }
        chaotic += d[x] * (r2 - mu[x] * mu[x]);
        deter += d[x] * (f2 - pf[x] * pf[x]);
        cross += 2.0 * d[x] * (rf - mu[x] * pf[x]);
    }
    Ok(CltDecomposition {
        stationary: d.iter().copied().collect(),
        long_run_mean: m,
        state_means: mu,
        sigma2_chaotic: chaotic.max(0.0),
        sigma2_deter: deter.max(0.0),
        sigma2_cross: cross,
        f_poisson: f.iter().copied().collect(),
        residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub n_reps: usize,
    /// Sample variance of `√n (average reward − long-run mean)` across replications.
    pub empirical_variance: f64,
    /// Normal-theory standard error of `empirical_variance`.
    pub std_error: f64,
    pub analytic_variance: f64,
    pub relative_error: f64,
}

/// Simulates `n_reps` independent runs of length `n` started from the
/// stationary distribution; run `i` draws from stream `(seed, i)`.
pub fn clt_empirical_check(
    chain: &ChainSpec,
    n: usize,
    n_reps: usize,
    seed: u64,
) -> Result<CltReport> {
    let dec = solve_poisson(chain)?;
    if n == 0 || n_reps < 2 {
        return Err(Error::Config("need n ≥ 1 and at least two replications".into()));
    }
    let k = chain.n_states();
    let cdf = |row: &[f64]| {
        row.iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect::<Vec<f64>>()
    };
    let rows: Vec<Vec<f64>> = chain.p.iter().map(|r| cdf(r)).collect();
    let init = cdf(&dec.stationary);
    let sd: Vec<Vec<f64>> =
        (0..k).map(|x| (0..k).map(|y| chain.noise(x, y).sqrt()).collect()).collect();
    let scaled: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i]);
            let mut x = draw_index(&init, rng.random::<f64>());
            let mut total = 0.0;
            for _ in 0..n {
                let y = draw_index(&rows[x], rng.random::<f64>());
                let mut r = chain.r[x][y];
                if sd[x][y] > 0.0 {
                    r += sd[x][y] * rng.sample::<f64, _>(StandardNormal);
                }
                total += r;
                x = y;
            }
            (n as f64).sqrt() * (total / n as f64 - dec.long_run_mean)
        })
        .collect();
    let empirical_variance = variance(&scaled);
    let analytic_variance = dec.total_variance();
    Ok(CltReport {
        n,
        n_reps,
        empirical_variance,
        std_error: empirical_variance * (2.0 / (n_reps - 1) as f64).sqrt(),
        analytic_variance,
        relative_error: (empirical_variance - analytic_variance).abs() / analytic_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform() -> Vec<Vec<f64>> {
        vec![vec![0.5, 0.5], vec![0.5, 0.5]]
    }

    #[test]
    fn reward_on_next_state_is_all_chaotic() {
        let chain = ChainSpec::new(uniform(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let d = solve_poisson(&chain).unwrap();
        assert_abs_diff_eq!(d.stationary[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d.state_means[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d.f_poisson[1], d.f_poisson[0], epsilon = 1e-14);
        assert_abs_diff_eq!(d.sigma2_chaotic, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(d.sigma2_deter, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.sigma2_cross, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reward_on_current_state_is_all_deterministic() {
        let chain = ChainSpec::new(uniform(), vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let d = solve_poisson(&chain).unwrap();
        assert_abs_diff_eq!(d.sigma2_chaotic, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.sigma2_deter, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(d.f_poisson[1] - d.f_poisson[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_reward_has_no_variance() {
        let p = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        let d = solve_poisson(&ChainSpec::new(p, vec![vec![3.0; 2]; 2])).unwrap();
        assert_abs_diff_eq!(d.total_variance(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pin_does_not_change_the_variances() {
        let p = vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.2, 0.3], vec![0.3, 0.3, 0.4]];
        let r = vec![vec![1.0, -2.0, 0.5], vec![0.0, 4.0, 1.0], vec![2.0, 2.0, -1.0]];
        let chain = ChainSpec::new(p, r);
        let a = solve_poisson_pinned(&chain, 0).unwrap();
        let b = solve_poisson_pinned(&chain, 2).unwrap();
        assert!(a.residual <= RESIDUAL_TOL && b.residual <= RESIDUAL_TOL);
        assert_abs_diff_eq!(a.sigma2_deter, b.sigma2_deter, epsilon = 1e-12);
        assert_abs_diff_eq!(a.sigma2_cross, b.sigma2_cross, epsilon = 1e-12);
        let shift = b.f_poisson[0] - a.f_poisson[0];
        for x in 0..3 {
            assert_abs_diff_eq!(b.f_poisson[x] - a.f_poisson[x], shift, epsilon = 1e-12);
        }
    }

    #[test]
    fn reducible_and_periodic_chains_rejected() {
        let r = vec![vec![0.0; 2]; 2];
        let split = ChainSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], r.clone());
        assert!(matches!(solve_poisson(&split), Err(Error::Validation(_))));
        let flip = ChainSpec::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], r);
        assert!(matches!(solve_poisson(&flip), Err(Error::Validation(_))));
    }

    #[test]
    fn constant_reward_has_no_empirical_variance() {
        let chain = ChainSpec::new(uniform(), vec![vec![2.0; 2]; 2]);
        let rep = clt_empirical_check(&chain, 10_000, 20, 1).unwrap();
        assert!(rep.empirical_variance < 1e-20);
    }
}
