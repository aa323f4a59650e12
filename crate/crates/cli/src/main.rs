use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use chaotic_rl_cli::config::{ExperimentConfig, SeedSpec};
use chaotic_rl_cli::{diagnose, pipeline};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chaotic-rl", version, about = "Risk-sensitive RL experiments over a β sweep")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Train every (β, seed) cell and save the learned policies.
    Train(Common),
    /// Roll out previously trained policies.
    Rollout(Common),
    /// Train, roll out and report in one go.
    Sweep(Common),
    /// Run the decomposition and martingale checks.
    Diagnose(Common),
    /// Merge per-cell rollout files into summary tables and heatmaps.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seed list; overrides `seeds` from the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads for the cell grid (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seeds) = &self.seeds {
            config.seeds = SeedSpec::List(seeds.clone());
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        let out = config.output_dir.clone();
        Ok((config, out))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.verb {
        Verb::Train(c) | Verb::Rollout(c) | Verb::Sweep(c) | Verb::Diagnose(c) | Verb::Report(c) => c,
    };
    let (config, out) = common.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        anyhow::ensure!(jobs > 0, "--jobs must be positive");
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().context("building the worker pool")?;
    pool.install(|| -> anyhow::Result<()> {
        match cli.verb {
            Verb::Train(_) => pipeline::train(&config, &out)?,
            Verb::Rollout(_) => pipeline::rollout(&config, &out)?,
            Verb::Report(_) => print_summary(&pipeline::report(&config, &out)?),
            Verb::Sweep(_) => print_summary(&pipeline::run_experiment(&config, &out)?),
            Verb::Diagnose(_) => {
                std::fs::create_dir_all(&out)?;
                diagnose::diagnose(&config, &out, std::io::stdout().lock())?;
            }
        }
        Ok(())
    })
}

fn print_summary(metrics: &pipeline::RolloutMetrics) {
    for m in &metrics.per_beta {
        println!(
            "beta={} seeds={} return_mean={:.6} return_std={:.6}",
            m.beta,
            m.seeds.len(),
            m.return_mean,
            m.return_std
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
