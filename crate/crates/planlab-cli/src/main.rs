//! Command-line front end for the planning laboratory: censuses, bound
//! curves, U-curve experiments, and policy-capacity sweeps, each emitting
//! CSV (and SVG where a figure exists) plus a rerunnable manifest.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(
    name = "planlab",
    version,
    about = "Tabular-MDP planning experiments with reproducible outputs"
)]
struct Cli {
    /// Cap the worker thread count. Results never depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count distinct optimal policies across sampled transition functions.
    Census {
        /// Regularizer axis: reduced planning discount or epsilon smoothing.
        #[arg(long, value_parser = ["gamma", "epsilon", "epsilon-soft"])]
        mode: String,
        /// Regularizer grid values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Independent reward tables to census.
        #[arg(long, default_value_t = 20)]
        reward_draws: usize,
        /// Stop after this many consecutive samples find no new policy.
        #[arg(long, default_value_t = planlab::census::DEFAULT_STOP_WINDOW)]
        stop_window: usize,
        /// Value-iteration sweeps per sampled transition function.
        #[arg(long, default_value_t = planlab::census::DEFAULT_VI_SWEEPS)]
        vi_sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the closed-form loss bound over a reduced-discount grid.
    BoundCurve {
        /// Dataset sizes, comma separated.
        #[arg(
            long = "n-list",
            value_delimiter = ',',
            default_value = "40000,1000000"
        )]
        n_list: Vec<usize>,
        /// Reduced-discount grid; defaults to the standard gamma grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// CSV output path; the SVG lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo loss curves over a regularizer grid and dataset sizes.
    Ucurve {
        #[arg(long, value_parser = ["gamma", "epsilon"])]
        mode: String,
        /// Trajectories per dataset, comma separated.
        #[arg(long = "n", value_delimiter = ',', default_value = "5,10,20,50")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Regularizer grid; defaults to the mode's standard grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// How epsilon planning is implemented in epsilon mode.
        #[arg(long, value_parser = ["softened", "q-fixed-point"], default_value = "softened")]
        epsilon_planner: String,
        /// Output stem; writes <stem>.csv and <stem>.svg.
        #[arg(long)]
        out_prefix: String,
    },
    /// Policy-gradient capacity sweep on a learned model.
    PolicySweep {
        /// Hidden widths, comma separated; defaults to the standard sweep.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long, default_value_t = 40)]
        runs: usize,
        /// Trajectories in the model-fitting dataset.
        #[arg(long, default_value_t = 20)]
        trajectories: usize,
        /// Steps per trajectory in the model-fitting dataset.
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output stem; writes <stem>.csv and <stem>.svg.
        #[arg(long)]
        out_prefix: String,
    },
    /// Re-execute a recorded run from its manifest.
    Rerun {
        /// Path to a <run>.manifest.json written by a previous command.
        manifest: PathBuf,
    },
}

fn dispatch(command: &Command) -> CmdResult {
    match command {
        Command::Census {
            mode,
            values,
            reward_draws,
            stop_window,
            vi_sweeps,
            seed,
            out,
        } => commands::cmd_census(
            mode,
            values,
            *reward_draws,
            *stop_window,
            *vi_sweeps,
            *seed,
            out,
        ),
        Command::BoundCurve {
            n_list,
            grid,
            delta,
            out,
        } => {
            let grid = grid
                .clone()
                .unwrap_or_else(|| planlab::experiments::GAMMA_GRID.to_vec());
            commands::cmd_bound_curve(n_list, &grid, *delta, out)
        }
        Command::Ucurve {
            mode,
            n,
            replicates,
            grid,
            seed,
            epsilon_planner,
            out_prefix,
        } => commands::cmd_ucurve(
            mode,
            n,
            *replicates,
            grid.as_deref(),
            *seed,
            epsilon_planner,
            out_prefix,
        ),
        Command::PolicySweep {
            hidden,
            runs,
            trajectories,
            horizon,
            seed,
            out_prefix,
        } => commands::cmd_policy_sweep(
            hidden.as_deref(),
            *runs,
            *trajectories,
            *horizon,
            *seed,
            out_prefix,
        ),
        Command::Rerun { manifest } => {
            let argv = commands::load_rerun_args(manifest)?;
            let cli = Cli::try_parse_from(&argv)
                .map_err(|e| Failure::Usage(format!("manifest does not parse: {e}")))?;
            dispatch(&cli.command)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} worker threads: {err}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
