use std::path::PathBuf;
use std::process::ExitCode;

use acc_cli::commands;
use acc_cli::{CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "accsd",
    version,
    about = "Sampled-data stability analysis of average-current-controlled converters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force switched simulation.
    Simulate(Io),
    /// Periodic steady state by shooting.
    Orbit(Io),
    /// Sampled-data Jacobian and its eigenvalues.
    Stability(Io),
    /// Sweep the compensator pole and bisect stability boundaries.
    SweepPole(Io),
    /// Harmonic-balance period-doubling prediction.
    Hb(Io),
    /// Control-to-output and audio-susceptibility frequency responses.
    Tf(Io),
}

fn run(cmd: Command) -> Result<serde_json::Value, CliError> {
    let (name, io) = match &cmd {
        Command::Simulate(io) => ("simulate", io),
        Command::Orbit(io) => ("orbit", io),
        Command::Stability(io) => ("stability", io),
        Command::SweepPole(io) => ("sweep-pole", io),
        Command::Hb(io) => ("hb", io),
        Command::Tf(io) => ("tf", io),
    };
    let cfg = RunConfig::load(&io.config)?;
    let out = &io.out;
    match cmd {
        Command::Simulate(_) => {
            commands::simulate(&cfg, out)?;
        }
        Command::Orbit(_) => {
            commands::orbit(&cfg, out)?;
        }
        Command::Stability(_) => {
            commands::stability(&cfg, out)?;
        }
        Command::SweepPole(_) => {
            commands::sweep_pole(&cfg, out)?;
        }
        Command::Hb(_) => {
            commands::hb(&cfg, out)?;
        }
        Command::Tf(_) => {
            commands::tf(&cfg, out)?;
        }
    }
    Ok(serde_json::json!({ "command": name, "report": out.join(commands::REPORT_FILE) }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(v) => {
            println!("{}", serde_json::to_string(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
