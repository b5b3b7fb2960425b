//! `gig`: command-line front end for the contract model.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or domain error,
//! 3 value iteration did not converge, 4 an output row failed its
//! invariant check.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(gig_core::Error),
    NoConvergence(String),
    Invariant(String),
    Io(String),
    Internal(String),
}

impl From<gig_core::Error> for CliError {
    fn from(e: gig_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Core(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Invariant(_) | CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::NoConvergence(m) => write!(f, "{m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gig",
    version,
    about = "Repeated gig contracts with a reference-dependent worker"
)]
struct Cli {
    /// JSON run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(flatten)]
    params: ParamArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Effort-cost coefficient.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Absolute risk aversion.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Memory parameter; a comma-separated list replaces the banana grid.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    beta: Vec<f64>,
    /// Discount factor; a comma-separated list replaces the banana list.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    delta: Vec<f64>,
    /// Output noise standard deviation.
    #[arg(long, global = true)]
    sigma: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Noiseless threshold and steady-state profit (JSON).
    Threshold,
    /// Noiseless trajectories, one block of rows per starting reference (CSV).
    Trajectory {
        /// Starting references, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        r0: Vec<f64>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Threshold and steady profit across memory parameters (CSV).
    Banana,
    /// Monte Carlo summary (JSON), optionally with every round as CSV.
    Simulate {
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Rounds excluded from the per-round statistics.
        #[arg(long)]
        burn_in: Option<usize>,
        /// Policy file written by `solve-dp`.
        #[arg(long, conflicts_with = "fixed_share")]
        policy: Option<PathBuf>,
        /// Contract every round with this share.
        #[arg(long)]
        fixed_share: Option<f64>,
        /// Also write every simulated round to this CSV file.
        #[arg(long)]
        rounds_csv: Option<PathBuf>,
    },
    /// Value iteration for the noisy game; writes the policy file to --out
    /// and the solver report to standard output.
    SolveDp {
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        quad_nodes: Option<usize>,
    },
}

fn single(flag: &str, values: &[f64]) -> Result<Option<f64>, CliError> {
    match values {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(CliError::Config(format!(
            "--{flag} takes a single value for this command"
        ))),
    }
}

/// Folds the command-line overrides into the loaded configuration.
fn merge(cli: &Cli, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
    let p = &cli.params;
    cfg.params.c = p.c.or(cfg.params.c);
    cfg.params.gamma = p.gamma.or(cfg.params.gamma);
    cfg.params.sigma = p.sigma.or(cfg.params.sigma);
    if let Command::Banana = cli.command {
        if !p.beta.is_empty() {
            cfg.beta_grid = Some(p.beta.clone());
        }
        if !p.delta.is_empty() {
            cfg.delta_list = Some(p.delta.clone());
        }
    } else {
        cfg.params.beta = single("beta", &p.beta)?.or(cfg.params.beta);
        cfg.params.delta = single("delta", &p.delta)?.or(cfg.params.delta);
    }

    match &cli.command {
        Command::Threshold | Command::Banana => {}
        Command::Trajectory { r0, rounds } => {
            if !r0.is_empty() {
                cfg.r0 = Some(config::OneOrMany::Many(r0.clone()));
            }
            cfg.rounds = rounds.or(cfg.rounds);
        }
        Command::Simulate {
            r0,
            rounds,
            paths,
            seed,
            burn_in,
            policy,
            fixed_share,
            rounds_csv: _,
        } => {
            if let Some(r0) = r0 {
                cfg.r0 = Some(config::OneOrMany::One(*r0));
            }
            cfg.rounds = rounds.or(cfg.rounds);
            cfg.paths = paths.or(cfg.paths);
            cfg.seed = seed.or(cfg.seed);
            cfg.burn_in = burn_in.or(cfg.burn_in);
            if policy.is_some() {
                cfg.policy = policy.clone();
                cfg.fixed_share = None;
            }
            if fixed_share.is_some() {
                cfg.fixed_share = *fixed_share;
                cfg.policy = None;
            }
        }
        Command::SolveDp {
            grid_min,
            grid_max,
            grid_points,
            tol,
            max_iter,
            quad_nodes,
        } => {
            cfg.grid.r_min = grid_min.or(cfg.grid.r_min);
            cfg.grid.r_max = grid_max.or(cfg.grid.r_max);
            cfg.grid.points = grid_points.or(cfg.grid.points);
            cfg.tol = tol.or(cfg.tol);
            cfg.max_iter = max_iter.or(cfg.max_iter);
            cfg.quad_nodes = quad_nodes.or(cfg.quad_nodes);
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = merge(cli, RunConfig::load(cli.config.as_deref())?)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Threshold => commands::threshold(&cfg, out),
        Command::Trajectory { .. } => commands::trajectory(&cfg, out),
        Command::Banana => commands::banana(&cfg, out),
        Command::Simulate { rounds_csv, .. } => {
            commands::simulate(&cfg, out, rounds_csv.as_deref())
        }
        Command::SolveDp { .. } => commands::solve_dp(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
