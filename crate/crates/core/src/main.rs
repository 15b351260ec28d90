use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gatesim::harness::{emit_outputs, run_experiment, write_event_logs, RunOptions};
use gatesim::{load_scenario, ControllerKind};

#[derive(Parser)]
#[command(
    name = "gatesim",
    version,
    about = "Auction-based signal control with perimeter gating"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Auction,
    #[value(name = "volume_fixed")]
    VolumeFixed,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Auction => ControllerKind::Auction,
            ControllerArg::VolumeFixed => ControllerKind::VolumeFixed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one controller at one flow limit.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        controller: ControllerArg,
        /// Hourly limit on the gated inflow, or `none`.
        #[arg(long, value_parser = parse_limit)]
        limit: Limit,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Add one record per auction to the event logs.
        #[arg(long)]
        trace_auctions: bool,
        #[arg(long)]
        force: bool,
    },
    /// Run the scenario's grid of controllers and limits.
    Experiment {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Clone, Copy)]
struct Limit(Option<u32>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Limit(None));
    }
    s.parse::<u32>()
        .map(|l| Limit(Some(l)))
        .map_err(|_| format!("expected veh/hr or `none`, got `{s}`"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            controller,
            limit,
            reps,
            seed,
            out,
            trace_auctions,
            force,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.experiment.base_seed = seed;
            }
            let reps = reps.unwrap_or(s.experiment.replications);
            let opts = RunOptions {
                trace_auctions,
                keep_events: true,
            };
            let agg = run_experiment(&s, &[controller.into()], &[limit.0], reps, opts)?;
            emit_outputs(&agg, &out, force)?;
            for cell in &agg.cells {
                write_event_logs(&out, cell)?;
            }
            eprintln!("wrote {} replication(s) to {}", reps, out.display());
        }
        Command::Experiment {
            scenario,
            grid,
            out,
            reps,
            seed,
            force,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.experiment.base_seed = seed;
            }
            let reps = reps.unwrap_or(s.experiment.replications);
            let limits: Vec<Option<u32>> = if grid {
                s.experiment.limits.iter().map(|&l| Some(l)).collect()
            } else {
                vec![s.metering.limit_veh_per_hr]
            };
            let controllers = s.experiment.controllers.clone();
            let agg = run_experiment(&s, &controllers, &limits, reps, RunOptions::default())?;
            emit_outputs(&agg, &out, force).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} cell(s) to {}", agg.cells.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
