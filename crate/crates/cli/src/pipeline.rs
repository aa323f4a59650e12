//! Train, roll out and aggregate over the (β, seed) grid.
//!
//! Each stage reads and writes per-cell files under `cells/beta_<β>/seed_<s>/`,
//! so the stages can run separately. Cells run in parallel on the current
//! rayon pool; merged outputs are written afterwards in sorted cell order.

use std::io::Write;
use std::path::{Path, PathBuf};

use chaotic_rl::diagnostics::{mean, variance};
use chaotic_rl::env::portfolio::action_table;
use chaotic_rl::env::EnvConfig;
use chaotic_rl::io::{fmt_f64, read_matrix_csv, write_matrix_csv};
use chaotic_rl::mdp::{sample_episode_from, TabularMdp};
use chaotic_rl::pg::{train_actor_critic, train_policy_gradient, write_training_log};
use chaotic_rl::rng::{derive_seed, stream, StreamRng};
use chaotic_rl::value::{greedy_policy, train_cmv_q, train_cmv_r, QTable};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{AlgorithmName, ExperimentConfig, RolloutConfig, StartRule};
use crate::error::{io_at, CliError, CliResult};
use crate::heatmap::{render_heatmap, ColorScale};
use crate::output::{create, write_manifest};

/// Episodes rolled out per cell when the config names neither a step nor an
/// episode budget.
pub const DEFAULT_ROLLOUT_EPISODES: u64 = 10_000;

/// Mixed into a cell seed to give the rollout streams their own family.
const ROLLOUT_TAG: u64 = 0x524f_4c4c;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub beta: f64,
    pub seed: u64,
}

impl Cell {
    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join("cells").join(format!("beta_{}", self.beta)).join(format!("seed_{}", self.seed))
    }
}

/// All cells in sorted (β, seed) order.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut betas = config.beta_sweep.clone();
    betas.sort_by(f64::total_cmp);
    let mut seeds = config.seed_list();
    seeds.sort_unstable();
    betas.iter().flat_map(|&beta| seeds.iter().map(move |&seed| Cell { beta, seed })).collect()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Format(format!("{}: {e}", path.display()))
}

fn action_header(n: usize) -> Vec<String> {
    (0..n).map(|a| format!("a{a}")).collect()
}

fn one_hot_rows(actions: &[usize], n_actions: usize) -> Vec<Vec<f64>> {
    actions
        .iter()
        .map(|&a| (0..n_actions).map(|k| if k == a { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// What training leaves behind for one cell.
pub struct TrainedCell {
    /// Action probabilities per state.
    pub policy: Vec<Vec<f64>>,
    pub reward_means: Vec<Option<f64>>,
    pub q_table: Option<QTable>,
    pub log: Option<Vec<chaotic_rl::pg::IterationLog>>,
}

pub fn train_cell(config: &ExperimentConfig, mdp: &TabularMdp, cell: Cell) -> CliResult<TrainedCell> {
    let alg = &config.algorithm;
    let na = mdp.n_actions();
    let trained = match alg.name {
        AlgorithmName::CmvQ => {
            let (q, est) = train_cmv_q(mdp, &alg.learning, cell.beta, cell.seed)?;
            TrainedCell {
                policy: one_hot_rows(&greedy_policy(&q), na),
                reward_means: est.table(),
                q_table: Some(q),
                log: None,
            }
        }
        AlgorithmName::CmvR => {
            let (q, est, _) = train_cmv_r(mdp, &alg.r_learning, cell.beta, cell.seed)?;
            TrainedCell {
                policy: one_hot_rows(&greedy_policy(&q), na),
                reward_means: est.table(),
                q_table: Some(q),
                log: None,
            }
        }
        AlgorithmName::ActorCritic => {
            let out = train_actor_critic(mdp, &alg.actor_critic, cell.beta, cell.seed)?;
            TrainedCell {
                policy: (0..mdp.n_states()).map(|s| out.policy.probs(s)).collect(),
                reward_means: out.estimator.table(),
                q_table: None,
                log: None,
            }
        }
        _ => {
            let pg = alg.pg_config().expect("batch method");
            let out = train_policy_gradient(mdp, &pg, cell.beta, cell.seed)?;
            TrainedCell {
                policy: (0..mdp.n_states()).map(|s| out.policy.probs(s)).collect(),
                reward_means: out.estimator.table(),
                q_table: None,
                log: Some(out.log),
            }
        }
    };
    Ok(trained)
}

fn write_trained(dir: &Path, t: &TrainedCell, n_actions: usize) -> CliResult<()> {
    let path = dir.join("policy.csv");
    write_matrix_csv(&action_header(n_actions), &t.policy, create(&path)?)?;

    let path = dir.join("reward_means.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["state", "action", "mean"]).map_err(csv_err(&path))?;
    for (i, m) in t.reward_means.iter().enumerate() {
        let (s, a) = (i / n_actions, i % n_actions);
        let v = m.map(fmt_f64).unwrap_or_default();
        w.write_record([s.to_string(), a.to_string(), v]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_at(&path))?;

    if let Some(q) = &t.q_table {
        write_matrix_csv(&action_header(n_actions), &q.to_rows(), create(&dir.join("q_table.csv"))?)?;
    }
    if let Some(log) = &t.log {
        write_training_log(log, create(&dir.join("training_log.csv"))?)?;
    }
    Ok(())
}

/// Trains every cell and writes its policy and estimates.
pub fn train(config: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let mdp = config.validate()?;
    cells(config).par_iter().try_for_each(|&cell| {
        let t = train_cell(config, &mdp, cell)?;
        log::info!("trained β={} seed={}", cell.beta, cell.seed);
        write_trained(&cell.dir(out), &t, mdp.n_actions())
    })?;
    write_manifest(config, out)?;
    Ok(())
}

/// Rollout statistics of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRollout {
    /// Discounted return of every completed episode.
    pub returns: Vec<f64>,
    /// Decisions taken in each state.
    pub visits: Vec<u64>,
    /// Sum over visits of `(R − R̄(s, a))²` with the true conditional mean.
    pub sq_dev_sum: Vec<f64>,
    pub action_counts: Vec<Vec<u64>>,
}

fn draw_action(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn episode_cap(config: &ExperimentConfig, mdp: &TabularMdp) -> usize {
    config.rollout.horizon.or(mdp.horizon()).unwrap_or_else(|| config.environment.max_steps())
}

/// Rolls out `policy` from the cell's rollout streams.
///
/// Episode `k` uses stream `(seed', k)` with `seed'` derived from the cell
/// seed. Under a step budget, episodes restart until the budget is spent and
/// the final, budget-truncated episode contributes visits but no return.
pub fn rollout_policy(
    mdp: &TabularMdp,
    policy: &[Vec<f64>],
    rollout: &RolloutConfig,
    cap: usize,
    seed: u64,
) -> CliResult<CellRollout> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    if policy.len() != ns || policy.iter().any(|r| r.len() != na) {
        return Err(CliError::Format(format!("policy table is not {ns}×{na}")));
    }
    let base = derive_seed(seed, &[ROLLOUT_TAG]);
    let mut acc = CellRollout {
        returns: Vec::new(),
        visits: vec![0; ns],
        sq_dev_sum: vec![0.0; ns],
        action_counts: vec![vec![0; na]; ns],
    };
    let (budget, by_steps) = match (rollout.n_steps, rollout.n_episodes) {
        (Some(n), _) => (n, true),
        (None, Some(n)) => (n, false),
        (None, None) => (DEFAULT_ROLLOUT_EPISODES, false),
    };
    let mut used = 0u64;
    let mut k = 0u64;
    while used < budget {
        let mut rng = stream(base, &[k]);
        let start = match rollout.start {
            StartRule::State(s) => s,
            StartRule::Initial => mdp.sample_initial(&mut rng),
        };
        let limit = if by_steps { cap.min((budget - used) as usize) } else { cap };
        let ep = sample_episode_from(
            mdp,
            start,
            |s, r: &mut StreamRng| draw_action(&policy[s], r.random::<f64>()),
            limit,
            &mut rng,
        )?;
        for tr in &ep.transitions {
            let dev = tr.reward - mdp.mean_reward(tr.state, tr.action);
            acc.visits[tr.state] += 1;
            acc.sq_dev_sum[tr.state] += dev * dev;
            acc.action_counts[tr.state][tr.action] += 1;
        }
        let cut_by_budget = by_steps && !ep.terminated && limit < cap;
        if !cut_by_budget {
            acc.returns.push(ep.discounted_return(mdp.gamma()));
        }
        if by_steps {
            // An episode that starts in a terminal state takes no step; count it
            // against the budget so the loop always advances.
            used += ep.len().max(1) as u64;
        } else {
            used += 1;
        }
        k += 1;
    }
    Ok(acc)
}

fn read_policy(dir: &Path) -> CliResult<Vec<Vec<f64>>> {
    let path = dir.join("policy.csv");
    let file = std::fs::File::open(&path).map_err(io_at(&path))?;
    Ok(read_matrix_csv(file)?.1)
}

fn write_rollout(dir: &Path, r: &CellRollout) -> CliResult<()> {
    let path = dir.join("returns.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["episode", "return"]).map_err(csv_err(&path))?;
    for (k, g) in r.returns.iter().enumerate() {
        w.write_record([k.to_string(), fmt_f64(*g)]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_at(&path))?;

    let path = dir.join("state_metrics.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["state", "visits", "sq_dev_sum"]).map_err(csv_err(&path))?;
    for (s, (v, q)) in r.visits.iter().zip(&r.sq_dev_sum).enumerate() {
        w.write_record([s.to_string(), v.to_string(), fmt_f64(*q)]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_at(&path))?;

    let path = dir.join("action_counts.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let na = r.action_counts.first().map_or(0, Vec::len);
    w.write_record(action_header(na)).map_err(csv_err(&path))?;
    for row in &r.action_counts {
        w.write_record(row.iter().map(u64::to_string)).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_at(&path))
}

fn read_rollout(dir: &Path) -> CliResult<CellRollout> {
    let path = dir.join("returns.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let mut returns = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(&path))?;
        returns.push(parse_field(&rec, 1, &path)?);
    }

    let path = dir.join("state_metrics.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let (mut visits, mut sq_dev_sum) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(&path))?;
        visits.push(parse_field(&rec, 1, &path)?);
        sq_dev_sum.push(parse_field(&rec, 2, &path)?);
    }

    let path = dir.join("action_counts.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let mut action_counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(&path))?;
        action_counts.push((0..rec.len()).map(|i| parse_field(&rec, i, &path)).collect::<CliResult<_>>()?);
    }
    Ok(CellRollout { returns, visits, sq_dev_sum, action_counts })
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> CliResult<T> {
    rec.get(i)
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| CliError::Format(format!("{}: bad field {i} in {:?}", path.display(), rec)))
}

/// Rolls out every trained cell.
pub fn rollout(config: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let mdp = config.validate()?;
    let cap = episode_cap(config, &mdp);
    cells(config).par_iter().try_for_each(|&cell| {
        let dir = cell.dir(out);
        let policy = read_policy(&dir)?;
        let r = rollout_policy(&mdp, &policy, &config.rollout, cap, cell.seed)?;
        write_rollout(&dir, &r)
    })?;
    write_manifest(config, out)?;
    Ok(())
}

/// Fractions of the budget in the risky asset, the risk-free asset, and
/// left uninvested, averaged over rollout decisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Investment {
    pub risky: f64,
    pub riskfree: f64,
    pub uninvested: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    pub n_episodes: usize,
    pub return_mean: f64,
    pub return_std: f64,
    pub occupancy: Vec<f64>,
    pub investment: Option<Investment>,
}

/// Seed-averaged rollout metrics for one β.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaMetrics {
    pub beta: f64,
    pub seeds: Vec<SeedMetrics>,
    /// Mean of the per-seed mean returns.
    pub return_mean: f64,
    /// Mean of the per-seed return standard deviations.
    pub return_std: f64,
    /// Standard deviation of the per-seed mean returns.
    pub return_mean_sd: f64,
    /// Mean of the per-seed occupancy fractions.
    pub occupancy: Vec<f64>,
    /// Visit counts pooled over seeds.
    pub visits: Vec<u64>,
    /// Pooled mean of `(R − R̄(s, a))²` per state, zero where never visited.
    pub risk: Vec<f64>,
    /// Pooled action frequencies per state, zero rows where never visited.
    pub action_fractions: Vec<Vec<f64>>,
    pub investment: Option<Investment>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutMetrics {
    pub per_beta: Vec<BetaMetrics>,
}

impl RolloutMetrics {
    pub fn at(&self, beta: f64) -> Option<&BetaMetrics> {
        self.per_beta.iter().find(|m| m.beta == beta)
    }
}

fn investment(env: &EnvConfig, counts: &[Vec<u64>]) -> Option<Investment> {
    let EnvConfig::Portfolio(p) = env else { return None };
    let table = action_table(p.q_max);
    let q = p.q_max as f64;
    let (mut n, mut risky, mut rf) = (0u64, 0.0, 0.0);
    for row in counts {
        for (a, &c) in row.iter().enumerate() {
            n += c;
            risky += c as f64 * table[a].1 as f64 / q;
            rf += c as f64 * table[a].0 as f64 / q;
        }
    }
    if n == 0 {
        return None;
    }
    let (risky, riskfree) = (risky / n as f64, rf / n as f64);
    Some(Investment { risky, riskfree, uninvested: 1.0 - risky - riskfree })
}

fn seed_metrics(env: &EnvConfig, seed: u64, r: &CellRollout) -> SeedMetrics {
    let total: u64 = r.visits.iter().sum();
    SeedMetrics {
        seed,
        n_episodes: r.returns.len(),
        return_mean: mean(&r.returns),
        return_std: variance(&r.returns).sqrt(),
        occupancy: r.visits.iter().map(|&v| if total == 0 { 0.0 } else { v as f64 / total as f64 }).collect(),
        investment: investment(env, &r.action_counts),
    }
}

/// Aggregates the cells of one β, in seed order.
pub fn aggregate_beta(env: &EnvConfig, beta: f64, rollouts: &[(u64, CellRollout)]) -> BetaMetrics {
    let seeds: Vec<SeedMetrics> = rollouts.iter().map(|(s, r)| seed_metrics(env, *s, r)).collect();
    let ns = rollouts.first().map_or(0, |(_, r)| r.visits.len());
    let na = rollouts.first().map_or(0, |(_, r)| r.action_counts.first().map_or(0, Vec::len));
    let means: Vec<f64> = seeds.iter().map(|m| m.return_mean).collect();
    let stds: Vec<f64> = seeds.iter().map(|m| m.return_std).collect();
    let occupancy =
        (0..ns).map(|s| seeds.iter().map(|m| m.occupancy[s]).sum::<f64>() / seeds.len() as f64).collect();
    let visits: Vec<u64> = (0..ns).map(|s| rollouts.iter().map(|(_, r)| r.visits[s]).sum()).collect();
    let risk = (0..ns)
        .map(|s| {
            let q: f64 = rollouts.iter().map(|(_, r)| r.sq_dev_sum[s]).sum();
            if visits[s] == 0 { 0.0 } else { q / visits[s] as f64 }
        })
        .collect();
    let action_fractions = (0..ns)
        .map(|s| {
            (0..na)
                .map(|a| {
                    let c: u64 = rollouts.iter().map(|(_, r)| r.action_counts[s][a]).sum();
                    if visits[s] == 0 { 0.0 } else { c as f64 / visits[s] as f64 }
                })
                .collect()
        })
        .collect();
    let investment = {
        let inv: Vec<Investment> = seeds.iter().filter_map(|m| m.investment).collect();
        (!inv.is_empty()).then(|| {
            let k = inv.len() as f64;
            Investment {
                risky: inv.iter().map(|i| i.risky).sum::<f64>() / k,
                riskfree: inv.iter().map(|i| i.riskfree).sum::<f64>() / k,
                uninvested: inv.iter().map(|i| i.uninvested).sum::<f64>() / k,
            }
        })
    };
    BetaMetrics {
        beta,
        return_mean: mean(&means),
        return_std: mean(&stds),
        return_mean_sd: variance(&means).sqrt(),
        occupancy,
        visits,
        risk,
        action_fractions,
        investment,
        seeds,
    }
}

/// Lays a per-state vector out as the grid, or as a single row otherwise.
pub fn as_grid(env: &EnvConfig, values: &[f64]) -> Vec<Vec<f64>> {
    match env {
        EnvConfig::Grid(g) if g.width * g.height == values.len() => {
            values.chunks(g.width).map(<[f64]>::to_vec).collect()
        }
        _ => vec![values.to_vec()],
    }
}

fn write_headerless(path: &Path, rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = create(path)?;
    for row in rows {
        let line = row.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}").map_err(io_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

fn write_report(env: &EnvConfig, metrics: &RolloutMetrics, out: &Path) -> CliResult<()> {
    let path = out.join("summary.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["beta", "n_seeds", "return_mean", "return_std", "return_mean_sd"])
        .map_err(csv_err(&path))?;
    for m in &metrics.per_beta {
        w.write_record([
            fmt_f64(m.beta),
            m.seeds.len().to_string(),
            fmt_f64(m.return_mean),
            fmt_f64(m.return_std),
            fmt_f64(m.return_mean_sd),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_at(&path))?;

    let path = out.join("seeds.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["beta", "seed", "n_episodes", "return_mean", "return_std"]).map_err(csv_err(&path))?;
    for m in &metrics.per_beta {
        for s in &m.seeds {
            w.write_record([
                fmt_f64(m.beta),
                s.seed.to_string(),
                s.n_episodes.to_string(),
                fmt_f64(s.return_mean),
                fmt_f64(s.return_std),
            ])
            .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_at(&path))?;

    let path = out.join("occupancy.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["beta", "state", "fraction", "visits", "risk"]).map_err(csv_err(&path))?;
    for m in &metrics.per_beta {
        for s in 0..m.occupancy.len() {
            w.write_record([
                fmt_f64(m.beta),
                s.to_string(),
                fmt_f64(m.occupancy[s]),
                m.visits[s].to_string(),
                fmt_f64(m.risk[s]),
            ])
            .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_at(&path))?;

    if metrics.per_beta.iter().any(|m| m.investment.is_some()) {
        let path = out.join("investment.csv");
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["beta", "risky", "riskfree", "uninvested"]).map_err(csv_err(&path))?;
        for m in &metrics.per_beta {
            if let Some(i) = m.investment {
                w.write_record([fmt_f64(m.beta), fmt_f64(i.risky), fmt_f64(i.riskfree), fmt_f64(i.uninvested)])
                    .map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(io_at(&path))?;
    }

    for m in &metrics.per_beta {
        let na = m.action_fractions.first().map_or(0, Vec::len);
        let path = out.join(format!("action_fractions_beta_{}.csv", m.beta));
        write_matrix_csv(&action_header(na), &m.action_fractions, create(&path)?)?;

        let heat = out.join("heatmaps");
        for (name, values) in [("path", &m.occupancy), ("risk", &m.risk)] {
            let grid = as_grid(env, values);
            write_headerless(&heat.join(format!("{name}_beta_{}.csv", m.beta)), &grid)?;
            render_heatmap(&grid, ColorScale::MinMax, &heat.join(format!("{name}_beta_{}.png", m.beta)))?;
        }
    }
    Ok(())
}

/// Reads every cell's rollout files and writes the merged tables and heatmaps.
pub fn report(config: &ExperimentConfig, out: &Path) -> CliResult<RolloutMetrics> {
    config.validate()?;
    let all = cells(config);
    let loaded: Vec<CellRollout> = all.par_iter().map(|c| read_rollout(&c.dir(out))).collect::<CliResult<_>>()?;
    let mut per_beta = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let beta = all[i].beta;
        let j = all[i..].iter().position(|c| c.beta != beta).map_or(all.len(), |k| i + k);
        let group: Vec<(u64, CellRollout)> =
            all[i..j].iter().zip(&loaded[i..j]).map(|(c, r)| (c.seed, r.clone())).collect();
        per_beta.push(aggregate_beta(&config.environment, beta, &group));
        i = j;
    }
    let metrics = RolloutMetrics { per_beta };
    write_report(&config.environment, &metrics, out)?;
    write_manifest(config, out)?;
    Ok(metrics)
}

/// Train, roll out and report every cell of the sweep.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> CliResult<RolloutMetrics> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    train(config, out)?;
    rollout(config, out)?;
    report(config, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draw_action_follows_the_cdf() {
        let p = [0.25, 0.0, 0.75];
        assert_eq!(draw_action(&p, 0.0), 0);
        assert_eq!(draw_action(&p, 0.2499), 0);
        assert_eq!(draw_action(&p, 0.25), 2);
        assert_eq!(draw_action(&p, 0.999_999_999), 2);
        assert_eq!(draw_action(&[0.0, 1.0], 0.0), 1);
    }

    #[test]
    fn aggregation_averages_per_seed_means() {
        let r = |rets: Vec<f64>, visits: Vec<u64>| CellRollout {
            returns: rets,
            sq_dev_sum: visits.iter().map(|&v| v as f64).collect(),
            action_counts: visits.iter().map(|&v| vec![v]).collect(),
            visits,
        };
        let env = EnvConfig::Grid(Default::default());
        let m = aggregate_beta(&env, 1.0, &[(0, r(vec![1.0, 3.0], vec![1, 3])), (1, r(vec![10.0], vec![2, 0]))]);
        assert_eq!(m.return_mean, (2.0 + 10.0) / 2.0);
        assert_eq!(m.occupancy, vec![(0.25 + 1.0) / 2.0, (0.75 + 0.0) / 2.0]);
        assert_eq!(m.visits, vec![3, 3]);
        assert_eq!(m.risk, vec![1.0, 1.0]);
    }
}
