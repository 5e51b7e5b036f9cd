use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use langevin_contract::experiment::{configure_workers, run_file, Command, RunOptions, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "langevin-contract",
    version,
    about = "Contraction experiments for kinetic Langevin integrators",
    after_help = format!("Set {WORKERS_ENV}=N to cap the worker pool.\nExit codes: 0 ok, 2 config error, 3 divergence.")
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synchronous-coupling traces and a JSON summary.
    Couple(Common),
    /// Certificate reports, or certified stepsize limits with "mode": "table1".
    Certify(Common),
    /// Spectral radii and stability thresholds on Gaussian targets.
    GaussianScan(Common),
    /// High-friction rate collapse and limit deviation.
    GlcScan(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Run parameters outside the theorem hypotheses and record divergence.
    #[arg(long)]
    force: bool,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (command, args) = match cli.command {
        Cmd::Couple(a) => (Command::Couple, a),
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::GaussianScan(a) => (Command::GaussianScan, a),
        Cmd::GlcScan(a) => (Command::GlcScan, a),
    };
    let opts = RunOptions {
        force: args.force,
        out: args.out,
    };
    match run_file(command, &args.config, &opts) {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
