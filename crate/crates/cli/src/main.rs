use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use llb_cli::{run, Command, Overrides};

/// Galerkin experiments for the controlled stochastic LLB equation.
#[derive(Parser)]
#[command(name = "llb", version)]
struct Args {
    /// simulate | energy | uniqueness | consistency | optimize
    command: String,
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Base seed, overriding the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo path count, overriding the config value.
    #[arg(long)]
    paths: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let quiet = args.quiet;
    let mut log = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let result = args.command.parse::<Command>().and_then(|cmd| {
        run(
            cmd,
            args.config.as_deref(),
            &args.out,
            Overrides {
                seed: args.seed,
                paths: args.paths,
            },
            &mut log,
        )
    });
    match result {
        Ok(manifest) => {
            log(&format!("wrote {} artifacts and manifest.json", manifest.artifacts.len()));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
