//! `mcn`: analyze, design, simulate and inspect network-closed control loops
//! described in JSON.

mod analyze;
mod common;
mod design;
mod paths;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use common::{FaultSelection, PropertyArg};

/// Exit status: 0 all checks pass, 1 input error, 2 a check fails or the
/// design is infeasible, 3 the simulated supervisor froze.
#[derive(Debug, Parser)]
#[command(name = "mcn", version, about = "Multi-hop control network analysis and design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check controllability, observability and their relaxations.
    Analyze(AnalyzeArgs),
    /// Redesign routing weights so a property survives every fault.
    Design(DesignArgs),
    /// Simulate the switching closed loop under a fault timeline.
    Simulate(SimulateArgs),
    /// List routes, delays and network transfer functions.
    Paths(PathsArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// MCN description (JSON).
    input: PathBuf,
    /// Root/zero coincidence tolerance.
    #[arg(long, default_value_t = 1e-6, value_parser = common::positive)]
    tol_cancel: f64,
    /// Relative residual below which the network numerator counts as zero.
    #[arg(long, default_value_t = 1e-9, value_parser = common::positive)]
    tol_eval: f64,
    /// `none`, `all`, or comma-separated indices into the fault set.
    #[arg(long, default_value = "all")]
    faults: FaultSelection,
    /// Replace the given weights by `1/|incoming(v)|`.
    #[arg(long)]
    equal_weights: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Property to check; repeat for several. Defaults to all four.
    #[arg(long)]
    property: Vec<PropertyArg>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "controllable")]
    property: PropertyArg,
    /// Edge to favour when choosing perturbations (`from->to`); repeatable.
    #[arg(long)]
    prefer_edge: Vec<String>,
    /// Redesigned MCN destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Design report destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Fault timeline (JSON); nominal throughout when absent.
    #[arg(long)]
    timeline: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    horizon: usize,
    /// Minimum dwell time of the mode detector, in periods.
    #[arg(long, default_value_t = 10)]
    tau: usize,
    /// Residual forgetting factor.
    #[arg(long, default_value_t = 0.9)]
    lambda: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    process_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    measurement_noise: f64,
    /// Step reference amplitude.
    #[arg(long, default_value_t = 1.0)]
    reference: f64,
    /// Reject timelines with events closer than `tau`.
    #[arg(long)]
    respect_dwell: bool,
    /// Trace CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON destination; stderr when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Mode detection log CSV destination.
    #[arg(long)]
    mode_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PathsArgs {
    #[command(flatten)]
    common: Common,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Design(a) => design::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Paths(a) => paths::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
