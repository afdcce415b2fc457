// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::load_config;
use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "invlabel",
    version,
    about = "Learn approximately invariant label functions of area-preserving maps"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set map.k=0.7` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output`)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate seed states and write trajectories
    Poincare(Common),
    /// Fit a label function by the boundary value problem
    SolveBvp(Common),
    /// Compute the smallest eigenpairs of the Rayleigh quotient
    SolveEvp(Common),
    /// Score a model with weighted Birkhoff averages
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        model: PathBuf,
    },
    /// Run a solver along one configuration axis
    Scan(Common),
    /// Evaluate a model on a cell-centered grid
    EvalGrid {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        model: PathBuf,
        #[arg(long, default_value_t = 200)]
        nx: usize,
        #[arg(long, default_value_t = 200)]
        ny: usize,
        /// Rescale to unit max |h| over the domain
        #[arg(long)]
        normalize: bool,
    },
}

fn load(common: &Common) -> CliResult<(config::RunConfig, serde_json::Value)> {
    let mut overrides = common.overrides.clone();
    if let Some(o) = &common.output {
        overrides.push(format!(
            "output={}",
            serde_json::Value::String(o.display().to_string())
        ));
    }
    load_config(common.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Poincare(c) => commands::poincare(&load(&c)?.0),
        Command::SolveBvp(c) => commands::solve_bvp_cmd(&load(&c)?.0),
        Command::SolveEvp(c) => commands::solve_evp_cmd(&load(&c)?.0),
        Command::Validate { common, model } => commands::validate_cmd(&load(&common)?.0, &model),
        Command::Scan(c) => {
            let (cfg, doc) = load(&c)?;
            commands::scan(&cfg, &doc)
        }
        Command::EvalGrid {
            common,
            model,
            nx,
            ny,
            normalize,
        } => commands::eval_grid_cmd(&load(&common)?.0, &model, nx, ny, normalize),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
