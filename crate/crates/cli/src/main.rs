mod commands;
mod error;
mod output;
mod setup;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectrum pre-learning, MCTS offloading plans and baseline comparisons
/// for an eVTOL swarm.
#[derive(Debug, Parser)]
#[command(name = "evtol-offload", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a world file from a scenario config.
    Gen(GenArgs),
    /// Pre-learn spectrum availability on a world with a bandit.
    Estimate(EstimateArgs),
    /// Fly one planner over a seed batch and write logs and metrics.
    Simulate(SimulateArgs),
    /// Combine several runs into one long-format table, or compare regret.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set task.deadline=2400`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `world-<seed>.json` in the output directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Ucb,
    Eps,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// World file written by `gen`.
    #[arg(long)]
    world: PathBuf,
    #[arg(long, value_enum, default_value = "ucb")]
    policy: PolicyArg,
    /// UCB bonus scale.
    #[arg(long = "eta-c", default_value_t = 1.0)]
    eta_c: f64,
    /// ε-greedy exploration rate.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Bandit rounds.
    #[arg(long, default_value_t = 10_000)]
    episodes: u64,
    /// Seed of the bandit draws; the world's seed by default.
    #[arg(long)]
    seed: Option<u64>,
    /// CPU prior for stations never connected, s.
    #[arg(long = "required-work", default_value_t = 1200.0)]
    required_work: f64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Run manifest (TOML) naming config, planner, seeds and overrides.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// mcts, tsp, eps-greedy, uct or ucb.
    #[arg(long)]
    planner: Option<String>,
    /// Seed list such as `0..99` (inclusive) or `1,4,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Fly every seed on this world instead of generating one per seed.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Also write the sampled track of every episode.
    #[arg(long)]
    tracks: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Run manifests to combine.
    manifests: Vec<PathBuf>,
    /// Planners to add on `--config`, or learners with `--regret`.
    #[arg(long, value_delimiter = ',')]
    planners: Vec<String>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Seeds for `--planners`.
    #[arg(long)]
    seeds: Option<String>,
    /// Regret curves of eps, ucb, uct and mcts on a Bernoulli instance.
    #[arg(long)]
    regret: bool,
    /// Arm means for `--regret`.
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.7,0.5,0.3,0.1")]
    means: Vec<f64>,
    /// Rounds for `--regret`.
    #[arg(long, default_value_t = 10_000)]
    rounds: u64,
    /// Keep every n-th round of the regret curves.
    #[arg(long, default_value_t = 10)]
    every: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "eta-c")]
    eta_c: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
