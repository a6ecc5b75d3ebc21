//! Command-line harness over the stream simulator: run scenarios, replay
//! captures, and produce analysis reports.

mod analyze;
mod replay;
mod reports;
mod scenario;
mod simulate;

use analyze::AnalyzeCmd;
use clap::{Parser, Subcommand};
use replay::ReplayArgs;
use simulate::SimulateArgs;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "gvspsim", version, about = "Deterministic video-stream attack and defense simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file end to end and write verdict reports.
    Simulate(SimulateArgs),
    /// Re-run detection over a recorded capture.
    Replay(ReplayArgs),
    /// Offline analyses that need no capture.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate::cmd_simulate(args),
        Command::Replay(args) => replay::cmd_replay(args),
        Command::Analyze(cmd) => analyze::cmd_analyze(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
