//! `blowuplab`: run radial blowup experiments, certify the profile
//! estimates against the traces, sweep parameter grids, and emit
//! plot-ready CSVs. Artifacts are deterministic: identical specs produce
//! byte-identical outputs.

mod commands;
mod spec;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "blowuplab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver described by a spec file and write the trace.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Trace directory (default: <output.dir>/trace).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the enabled checks against a trace; exit 0 iff all pass.
    Verify {
        trace_dir: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Report directory (default: the trace directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-check tolerance override, NAME=VALUE (repeatable).
        #[arg(long = "tol-override")]
        tol_override: Vec<String>,
    },
    /// Run + verify a grid of parameter cells concurrently.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        sweep: PathBuf,
        /// Concurrent cells (default: $BLOWUPLAB_WORKERS, then 4).
        #[arg(long)]
        workers: Option<usize>,
        /// Sweep output directory (default: <output.dir>/sweep).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit plot-ready CSVs from a finished trace.
    Plotdata {
        trace_dir: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (default: <trace>/plotdata).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { spec, out } => commands::cmd_run(&spec, out).map(|()| true),
        Command::Verify {
            trace_dir,
            spec,
            out,
            tol_override,
        } => commands::cmd_verify(&trace_dir, &spec, out, &tol_override),
        Command::Sweep {
            spec,
            sweep,
            workers,
            out,
        } => commands::cmd_sweep(&spec, &sweep, workers, out),
        Command::Plotdata {
            trace_dir,
            spec,
            out,
        } => commands::cmd_plotdata(&trace_dir, &spec, out).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
