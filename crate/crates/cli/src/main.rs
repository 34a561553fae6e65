use std::path::PathBuf;
use std::process::ExitCode;

use blcirs::Variant;
use blcirs_cli::commands::{cmd_bounds, cmd_compare, cmd_solve, CommandOutcome};
use blcirs_cli::config::ProblemArgs;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blcirs", version, about = "Block BiCGSTAB with residual smoothing for multiple right-hand sides")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more solvers and write histories, plots and a summary.
    Solve(ProblemArgs),
    /// Evaluate rounding-error bounds against a recorded history.
    Bounds {
        /// History CSV written by `solve`.
        #[arg(long)]
        history: PathBuf,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Run solvers side by side (default 1 and 4) and write comparison artifacts.
    Compare(ProblemArgs),
}

fn finish(out: CommandOutcome) -> ExitCode {
    for e in &out.errors {
        eprintln!("error: {e}");
    }
    if !out.any_converged {
        eprintln!("no solver converged");
    }
    if out.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Command::Solve(args) => Ok(finish(cmd_solve(&args.resolve(&Variant::ALL)?)?)),
        Command::Compare(args) => {
            let cfg = args.resolve(&[Variant::NoSmoothing, Variant::BlCirsOrtho])?;
            Ok(finish(cmd_compare(&cfg)?))
        }
        Command::Bounds { history, problem } => {
            cmd_bounds(&history, &problem)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
