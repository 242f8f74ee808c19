//! Virtual probe station for wafer-level force-deflection testing of
//! cantilever structures with a rigid proof mass.
//!
//! Exit codes: 0 success, 2 invalid input (flags, config, presets, trace
//! files, io), 3 solver or instrument failure, 4 analysis failure.

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod plot;
mod report;
mod util;

#[derive(Parser)]
#[command(
    name = "probe-station",
    version,
    about = "Simulate, measure and analyze stylus force-deflection traces \
             on cantilever test structures"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the ideal contact solver over a depth grid; write trace + events.
    Simulate(commands::SimulateArgs),
    /// Run the virtual instrument (noise, bias, actuator error, frame
    /// compliance) over a depth grid; write a measurement trace.
    Measure(commands::MeasureArgs),
    /// Fit stiffness and segment regimes from a trace file; write a report.
    Analyze(commands::AnalyzeArgs),
    /// Fitted vs analytic stiffness at each landing position in the config.
    SweepPosition(commands::SweepPositionArgs),
    /// Hertzian sphere-on-flat peak pressure and contact radius.
    Hertz(commands::HertzArgs),
    /// Repeated measurements with randomized stylus placement, fanned out
    /// across worker threads, plus a cross-run variation report.
    Montecarlo(commands::MontecarloArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => commands::simulate(a),
        Cmd::Measure(a) => commands::measure(a),
        Cmd::Analyze(a) => commands::analyze(a),
        Cmd::SweepPosition(a) => commands::sweep_position(a),
        Cmd::Hertz(a) => commands::hertz(a),
        Cmd::Montecarlo(a) => commands::montecarlo(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
