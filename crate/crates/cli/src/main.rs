//! `batd` command-line frontend: analysis tables, single runs, sweeps,
//! evaluations, table reproduction, and SVG plots.
//!
//! Exit codes: 0 on success, 2 on usage errors (from the parser), 1 on
//! runtime errors.

mod commands;
mod out;
mod svg;
mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "batd",
    version,
    about = "Behavior-aware gradient-TD corrections: benchmarks, sweeps, and exact mean-system analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone)]
struct Common {
    /// Config file (key-value format; see README).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for all derived run seeds.
    #[arg(long, global = true)]
    base_seed: Option<u64>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory for CSVs, tables and figures.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write per-run RMSPBE curves.
    #[arg(long, global = true)]
    curves: bool,

    /// Extra environment definition files to register.
    #[arg(long = "env-file", global = true)]
    env_files: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Pinned,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReproduceTarget {
    AucTable,
    FinalTable,
    AblationTable,
    Robustness,
}

#[derive(Subcommand)]
enum Command {
    /// Exact mean-operator verification table (fixed-point sigma, Hurwitz
    /// margins, best step-size factors).
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Environment name or `all`.
        #[arg(long, default_value = "all")]
        env: String,
        /// Use pinned tuned parameters instead of sweep winners.
        #[arg(long, value_enum)]
        fixture: Option<FixtureName>,
        /// Directory holding prior sweep output (defaults to --out).
        #[arg(long)]
        sweep_dir: Option<PathBuf>,
    },
    /// One seeded run of one learner; prints its metrics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        env: String,
        #[arg(long)]
        algo: String,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha_w: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Steps to simulate (defaults to the benchmark horizon).
        #[arg(long)]
        horizon: Option<usize>,
        /// Raw RNG seed for this single run.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tune one (environment, algorithm) pair over its search space.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        env: String,
        #[arg(long)]
        algo: String,
    },
    /// Evaluate a configuration on the evaluation seeds.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        env: String,
        #[arg(long)]
        algo: String,
        /// Load the winner recorded by a prior sweep instead of flags.
        #[arg(long)]
        from_sweep: bool,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha_w: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Rebuild a results artifact end to end (sweeps, evaluations, tables,
    /// figures).
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        target: ReproduceTarget,
    },
    /// Render learning-curve figures from previously written curve CSVs.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Results directory holding <env>/<algo>/curves/*.csv.
        #[arg(long)]
        curves_dir: PathBuf,
        /// Environment name or `all`.
        #[arg(long, default_value = "all")]
        env: String,
        /// Comma-separated algorithm filter (empty = all found).
        #[arg(long, default_value = "")]
        algo: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { common, env, fixture, sweep_dir } => {
            commands::analyze(&common, &env, fixture.is_some(), sweep_dir)
        }
        Command::Run { common, env, algo, alpha, alpha_w, eta, beta, horizon, seed } => {
            commands::run_once(&common, &env, &algo, alpha, alpha_w, eta, beta, horizon, seed)
        }
        Command::Sweep { common, env, algo } => commands::sweep(&common, &env, &algo),
        Command::Eval { common, env, algo, from_sweep, alpha, alpha_w, eta, beta, horizon } => {
            commands::eval(&common, &env, &algo, from_sweep, alpha, alpha_w, eta, beta, horizon)
        }
        Command::Reproduce { common, target } => commands::reproduce(&common, target),
        Command::Plot { common, curves_dir, env, algo } => {
            commands::plot(&common, &curves_dir, &env, &algo)
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
