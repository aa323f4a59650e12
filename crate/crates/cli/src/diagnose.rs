//! The `diagnose` verb: decomposition and martingale checks on the configured
//! environment under the uniformly random policy.

use std::io::Write;
use std::path::Path;

use chaotic_rl::diagnostics::{
    clt_empirical_check, entropic_bound_check, martingale_check, ChainSpec,
};
use chaotic_rl::doob::doob_decompose;
use chaotic_rl::estimator::RewardMeanEstimator;
use chaotic_rl::io::fmt_f64;
use chaotic_rl::mdp::sample_episode;
use chaotic_rl::rng::{stream, StreamRng};
use rand::Rng;

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError, CliResult};
use crate::output::{create, write_manifest};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// One reported number.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub check: String,
    pub quantity: String,
    pub value: f64,
}

fn row(check: impl Into<String>, quantity: &str, value: f64) -> DiagnosticRow {
    DiagnosticRow { check: check.into(), quantity: quantity.into(), value }
}

/// Runs the checks that apply to the configured environment.
///
/// * Doob reconstruction error over random episodes.
/// * Martingale moment identity with exact conditional means.
/// * Entropic bound at every positive β of the sweep.
/// * CLT variance decomposition, for continuing environments.
pub fn run_diagnostics(config: &ExperimentConfig) -> CliResult<Vec<DiagnosticRow>> {
    let mdp = config.validate()?;
    let d = &config.diagnostics;
    let na = mdp.n_actions();
    let uniform = move |_s: usize, rng: &mut StreamRng| rng.random_range(0..na);
    let cap = config.rollout.horizon.or(mdp.horizon()).unwrap_or_else(|| config.environment.max_steps());
    let exact = RewardMeanEstimator::exact(&mdp);
    let mut rows = Vec::new();

    let mut worst = 0.0f64;
    for k in 0..d.n_episodes as u64 {
        let mut rng = stream(d.seed, &[1, k]);
        let ep = sample_episode(&mdp, uniform, cap, &mut rng)?;
        let step_means = vec![0.0; ep.len()];
        let dec = doob_decompose(&ep, &exact, mdp.gamma(), &step_means)?;
        worst = worst.max((dec.reconstructed() - ep.discounted_return(mdp.gamma())).abs());
    }
    rows.push(row("doob", "max_abs_error", worst));

    if mdp.is_episodic() {
        let m = martingale_check(&mdp, uniform, &exact, d.n_episodes, cap, d.seed)?;
        rows.push(row("martingale", "mean_squared_chaotic", m.mean_squared_chaotic));
        rows.push(row("martingale", "mean_quadratic_variation", m.mean_quadratic_variation));
        rows.push(row("martingale", "pooled_se", m.pooled_se));
        rows.push(row("martingale", "z", m.z));

        let mut betas = config.beta_sweep.clone();
        betas.sort_by(f64::total_cmp);
        for &beta in betas.iter().filter(|&&b| b > 0.0) {
            let e = entropic_bound_check(&mdp, uniform, beta, d.n_episodes, cap, d.seed)?;
            let name = format!("entropic_beta_{beta}");
            rows.push(row(name.clone(), "lhs", e.lhs));
            rows.push(row(name.clone(), "rhs", e.rhs));
            rows.push(row(name, "combined_se", e.combined_se()));
        }
    } else {
        let chain = ChainSpec::from_policy(&mdp, &vec![0; mdp.n_states()])?;
        let c = clt_empirical_check(&chain, d.clt_steps, d.clt_replications, d.seed)?;
        rows.push(row("clt", "empirical_variance", c.empirical_variance));
        rows.push(row("clt", "analytic_variance", c.analytic_variance));
        rows.push(row("clt", "relative_error", c.relative_error));
    }
    Ok(rows)
}

pub fn write_diagnostics(rows: &[DiagnosticRow], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let fail = |e: csv::Error| CliError::Format(e.to_string());
    w.write_record(["check", "quantity", "value"]).map_err(fail)?;
    for r in rows {
        w.write_record([r.check.as_str(), r.quantity.as_str(), &fmt_f64(r.value)]).map_err(fail)?;
    }
    w.flush().map_err(io_at(path))
}

/// Runs the checks, writes `diagnostics.csv` under `out` and prints
/// `check.quantity=value` lines to `console`.
pub fn diagnose(config: &ExperimentConfig, out: &Path, mut console: impl Write) -> CliResult<Vec<DiagnosticRow>> {
    let rows = run_diagnostics(config)?;
    write_diagnostics(&rows, &out.join(DIAGNOSTICS_FILE))?;
    for r in &rows {
        writeln!(console, "{}.{}={}", r.check, r.quantity, fmt_f64(r.value)).map_err(io_at("<stdout>"))?;
    }
    write_manifest(config, out)?;
    Ok(rows)
}
