use std::path::PathBuf;

use clap::{Parser, Subcommand};

use lastiter_bench::commands;

/// Runs experiments on incremental methods and checks them against the
/// last-iterate bounds.
#[derive(Parser)]
#[command(name = "lastiter-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a spec; exit 1 if any verifier fails, 2 if the spec is invalid.
    Run {
        spec: PathBuf,
        /// Root for relative output directories (default: $LASTITER_OUT, then `.`).
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Fit rates across the K axis and write summary.csv next to the manifest.
    Report { manifest: PathBuf },
    /// Evaluate one verifier on a saved trajectory.
    Verify {
        trajectory: PathBuf,
        #[arg(long)]
        lemma: String,
        /// Problem JSON (default: problem.json next to or above the runs directory).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Reference point z for per-epoch lemmas: x-star, x0 or midpoint.
        #[arg(long, default_value = "x-star")]
        reference: String,
    },
    /// Re-execute a manifest and compare every artifact byte for byte.
    Replay {
        manifest: PathBuf,
        /// Also write the fresh artifacts here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { spec, out_root } => commands::cmd_run(&spec, out_root.as_deref()),
        Command::Report { manifest } => commands::cmd_report(&manifest),
        Command::Verify { trajectory, lemma, problem, reference } => {
            commands::cmd_verify(&trajectory, &lemma, problem.as_deref(), &reference)
        }
        Command::Replay { manifest, write } => commands::cmd_replay(&manifest, write.as_deref()),
    };
    std::process::exit(code);
}
