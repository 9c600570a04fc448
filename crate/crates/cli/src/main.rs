use std::path::PathBuf;

use clap::Parser;

use fracnash_cli::config::Command;
use fracnash_cli::{run, RunOptions};

/// Fractional Nash inequalities: numerical checks and certificates.
#[derive(Debug, Parser)]
#[command(name = "fracnash", version)]
struct Cli {
    /// Command to run; overrides the config's `command`.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and the manifest.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed; overrides the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
    /// Treat inconclusive torus classifications as failures.
    #[arg(long)]
    strict: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { fracnash_cli::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let opts = RunOptions {
        command: cli.command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        jobs: cli.jobs,
        strict: cli.strict,
    };
    std::process::exit(run(&opts));
}
