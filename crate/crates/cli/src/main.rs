use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tlp_cli::{execute, resolve_workers, CliConfig, Command};

#[derive(Parser)]
#[command(
    name = "tlp",
    version,
    about = "Targeted local projections: estimation, double bootstrap and Monte Carlo coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one panel from the design's process.
    Simulate(Common),
    /// LP and VAR impulse responses for one panel.
    Estimate(Common),
    /// Double-bootstrap bands for one panel.
    Msdb(Common),
    /// Monte Carlo coverage experiment.
    Montecarlo(Common),
    /// Bootstrap-mean versus pseudo-truth centering on shared replications.
    CompareCentering(Common),
}

#[derive(Args)]
struct Common {
    /// JSON design file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the design's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to TLP_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write SVG charts.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Estimate(a) => (Command::Estimate, a),
        Cmd::Msdb(a) => (Command::Msdb, a),
        Cmd::Montecarlo(a) => (Command::Montecarlo, a),
        Cmd::CompareCentering(a) => (Command::CompareCentering, a),
    };
    let env = std::env::var("TLP_WORKERS").ok();
    let result = resolve_workers(args.workers, env.as_deref()).and_then(|workers| {
        execute(&CliConfig {
            command,
            config_path: args.config,
            out_dir: args.out,
            seed: args.seed,
            workers,
            emit_plots: args.plots,
        })
    });
    match result {
        Ok(files) => {
            for f in files {
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
