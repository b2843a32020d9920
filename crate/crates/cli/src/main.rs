use clap::{Parser, Subcommand};
use lmpc_cli::{cmd_export, cmd_run, cmd_verify, RunFlags};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lmpc", version, about = "Decentralized learning MPC for iterative multi-agent tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's iteration count.
        #[arg(long = "max-iterations")]
        max_iterations: Option<usize>,
        /// Omit wall-clock timings so repeated runs produce identical files.
        #[arg(long = "seedless-deterministic")]
        deterministic: bool,
    },
    /// Re-check a run directory; exits 3 when violations are found.
    Verify {
        #[arg(long)]
        artifacts: PathBuf,
    },
    /// Write plot-ready tables from a run directory.
    Export {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Run { scenario, out, max_iterations, deterministic } => {
            cmd_run(&scenario, &out, RunFlags { max_iterations, deterministic })
        }
        Command::Verify { artifacts } => cmd_verify(&artifacts),
        Command::Export { artifacts, out } => cmd_export(&artifacts, &out),
    };
    ExitCode::from(code as u8)
}
