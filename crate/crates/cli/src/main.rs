#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, GlobalFlags, GridName, RegimeName, SimMode, OUT_DIR_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] stable_smalldev::error::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "smalldev", version, about = "Shifted small-ball probabilities for symmetric stable processes")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample paths and write them as CSV.
    Simulate(SimulateArgs),
    /// Small-ball probability estimators.
    Smallball {
        #[command(subcommand)]
        op: SmallballOp,
        #[command(flatten)]
        args: SmallballArgs,
    },
    /// c_α, K_α and C(α) for one or more α.
    Constants(ConstantsArgs),
    /// Scaling-regime diagnostics on geometric time grids.
    Lil {
        #[command(subcommand)]
        op: LilOp,
        #[command(flatten)]
        args: LilArgs,
    },
    /// Quick run of the invariant checks; nonzero exit on any failure.
    Selftest,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: Option<SimMode>,
    /// Jumps smaller than this are replaced by a Gaussian proxy.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SmallballOp {
    /// Plain Monte Carlo.
    Crude,
    /// Importance sampling under the tilted law.
    Is,
    /// Shifted vs centred probabilities on common paths.
    Anderson,
    /// Log-log slope of the sup-norm tail.
    Tail,
}

#[derive(Debug, Args)]
struct SmallballArgs {
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, value_enum, global = true)]
    regime: Option<RegimeName>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// zero, identity, tent, or a JSON knots file.
    #[arg(long, global = true)]
    shift: Option<String>,
    /// Tail levels, comma separated.
    #[arg(long, value_delimiter = ',', global = true)]
    x: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// α values, comma separated; defaults to --alpha.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    n_grid: Option<usize>,
    /// Also fit K_α from simulated small-ball probabilities.
    #[arg(long)]
    mc: bool,
    /// Radii for the fit, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum LilOp {
    /// log T_k over an index range.
    Grid,
    /// Increment ratios at the given indices.
    Ratios,
    /// Scaled sup-distances with their running minimum.
    DistanceSweep,
    /// Convergence of ∫ dt/(t h(t)^α).
    IntegralTest,
}

#[derive(Debug, Args)]
struct LilArgs {
    #[arg(long, value_enum, global = true)]
    grid: Option<GridName>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    k_start: Option<u64>,
    #[arg(long, global = true)]
    k_end: Option<u64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    shift: Option<String>,
    /// Indices for `ratios`, comma separated.
    #[arg(long, value_delimiter = ',', global = true)]
    k: Option<Vec<u64>>,
    /// h(t) = (log t)^a (log log t)^b: the exponent a.
    #[arg(long, global = true)]
    log_exp: Option<f64>,
    /// The exponent b.
    #[arg(long, global = true)]
    loglog_exp: Option<f64>,
    #[arg(long, global = true)]
    log_t_max: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_command_flags(cfg: &mut ExperimentConfig, cmd: Command) -> commands::Task {
    match cmd {
        Command::Simulate(a) => {
            set(&mut cfg.simulate.mode, a.mode);
            set(&mut cfg.simulate.eps, a.eps);
            commands::Task::Simulate
        }
        Command::Smallball { op, args } => {
            let b = &mut cfg.smallball;
            set(&mut b.r, args.r);
            set(&mut b.regime, args.regime);
            set(&mut b.c, args.c);
            set(&mut b.lambda, args.lambda);
            set(&mut b.shift, args.shift);
            set(&mut b.x, args.x);
            commands::Task::Smallball(op)
        }
        Command::Constants(a) => {
            let b = &mut cfg.constants;
            set(&mut b.alphas, a.alphas);
            set(&mut b.n_grid, a.n_grid);
            set(&mut b.r, a.r);
            b.mc |= a.mc;
            commands::Task::Constants
        }
        Command::Lil { op, args } => {
            let b = &mut cfg.lil;
            set(&mut b.grid, args.grid);
            set(&mut b.gamma, args.gamma);
            set(&mut b.k_start, args.k_start);
            set(&mut b.k_end, args.k_end);
            set(&mut b.delta, args.delta);
            set(&mut b.shift, args.shift);
            set(&mut b.k, args.k);
            b.log_exp = args.log_exp.or(b.log_exp);
            b.loglog_exp = args.loglog_exp.or(b.loglog_exp);
            set(&mut b.log_t_max, args.log_t_max);
            commands::Task::Lil(op)
        }
        Command::Selftest => commands::Task::Selftest,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let mut cfg = ExperimentConfig::resolve(&cli.global, env_out)?;
    let task = apply_command_flags(&mut cfg, cli.command);
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Failed(format!("worker pool: {e}")))?;
    pool.install(|| commands::execute(task, &cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
