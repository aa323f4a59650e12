//! Independent checks of the estimators and of the theory behind them.
//!
//! Every Monte-Carlo report carries its sample count and standard error.

mod clt;
mod gradient;
mod martingale;

pub use clt::{
    clt_empirical_check, solve_poisson, solve_poisson_pinned, ChainSpec, CltDecomposition,
    CltReport, RESIDUAL_TOL,
};
pub use gradient::{
    exact_gradient, exact_objective, finite_diff_gradient_check, gradient_bias_check,
    mc_gradient_stats, BiasReport, FdReport, GradientStats, Objective,
};
pub use martingale::{
    entropic_bound_check, martingale_check, predictable_quadratic_variation, EntropicReport,
    MartingaleReport,
};

/// Arithmetic mean; NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero with fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Running per-coordinate sums for vector-valued samples.
#[derive(Clone, Debug)]
pub(crate) struct VectorMoments {
    n: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl VectorMoments {
    pub(crate) fn new(dim: usize) -> Self {
        Self { n: 0, sum: vec![0.0; dim], sum_sq: vec![0.0; dim] }
    }

    pub(crate) fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    pub(crate) fn count(&self) -> usize {
        self.n
    }

    pub(crate) fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.n as f64).collect()
    }

    pub(crate) fn std_error(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let m = s / n;
                ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((standard_error(&xs) - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
        assert_eq!(variance(&[7.0]), 0.0);
    }

    #[test]
    fn vector_moments_agree_with_scalar_ones() {
        let rows = [[1.0, -1.0], [2.0, 0.5], [4.0, 0.0]];
        let mut m = VectorMoments::new(2);
        for r in &rows {
            m.push(r);
        }
        let col0: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        assert!((m.mean()[0] - mean(&col0)).abs() < 1e-15);
        assert!((m.std_error()[0] - standard_error(&col0)).abs() < 1e-12);
        assert_eq!(m.count(), 3);
    }
}
